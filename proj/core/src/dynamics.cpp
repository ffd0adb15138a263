#include "quadlab/vehicle/dynamics.hpp"

#include "quadlab/common.hpp"

#include <cmath>

namespace quadlab {

Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& euler) {
  const double cph = std::cos(euler.x()), sph = std::sin(euler.x());
  const double cth = std::cos(euler.y()), sth = std::sin(euler.y());
  const double cps = std::cos(euler.z()), sps = std::sin(euler.z());
  Eigen::Matrix3d R;
  R << cth * cps, sph * sth * cps - cph * sps, cph * sth * cps + sph * sps,
       cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps,
       -sth,      sph * cth,                   cph * cth;
  return R;
}

Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& euler) {
  // |cos(pitch)| < sin(1e-3) iff pitch is within ~1e-3 rad of an odd
  // multiple of pi/2.
  if (std::abs(std::cos(euler.y())) < 1e-3) {
    throw GimbalLockError("pitch within 1e-3 rad of +-pi/2");
  }
  const double cph = std::cos(euler.x()), sph = std::sin(euler.x());
  const double cth = std::cos(euler.y()), tth = std::tan(euler.y());
  Eigen::Matrix3d Q;
  Q << 1.0, sph * tth, cph * tth,
       0.0, cph,       -sph,
       0.0, sph / cth, cph / cth;
  return Q;
}

Eigen::Vector3d body_velocity(const VehicleState& s) {
  return rotation_matrix(s.euler).transpose() * s.v;
}

Eigen::Vector3d body_force(const VehicleState& s, const ModelParams& mp) {
  return body_force(s.rotor, body_velocity(s), mp);
}

Eigen::Vector3d body_force(const Eigen::Vector4d& rotor, const Eigen::Vector3d& vb,
                           const ModelParams& mp) {
  const double sum_w = rotor.sum();
  const double sum_w2 = rotor.squaredNorm();
  return {-mp.kx * vb.x() * sum_w,
          -mp.ky * vb.y() * sum_w,
          -mp.kw * sum_w2 - mp.kz * vb.z() * sum_w - mp.kh * (vb.x() * vb.x() + vb.y() * vb.y())};
}

Eigen::Vector4d rotor_accel(const Eigen::Vector4d& rotor, const Eigen::Vector4d& u,
                            const ModelParams& mp) {
  return ((mp.omega_max - mp.omega_min) * u.array() + mp.omega_min - rotor.array()) / mp.tau;
}

Eigen::Vector3d body_moment(const VehicleState& s, const Eigen::Vector4d& rotor_dot,
                            const ModelParams& mp) {
  return body_moment(s.rotor, rotor_dot, body_velocity(s), s.rates.z(), mp);
}

Eigen::Vector3d body_moment(const Eigen::Vector4d& w, const Eigen::Vector4d& rotor_dot,
                            const Eigen::Vector3d& vb, double yaw_rate, const ModelParams& mp) {
  const double mx = mp.kp * (w(0) * w(0) - w(1) * w(1) - w(2) * w(2) + w(3) * w(3)) +
                    mp.kpv * vb.y();
  const double my = mp.kq * (w(0) * w(0) + w(1) * w(1) - w(2) * w(2) - w(3) * w(3)) +
                    mp.kqv * vb.x();
  const double mz = mp.kr1 * (-w(0) + w(1) - w(2) + w(3)) +
                    mp.kr2 * (-rotor_dot(0) + rotor_dot(1) - rotor_dot(2) + rotor_dot(3)) -
                    mp.krr * yaw_rate;
  return {mx, my, mz};
}

Vec16 state_derivative(const VehicleState& s, const Eigen::Vector4d& u,
                       const Eigen::Vector3d& m_ext, const ModelParams& mp) {
  const Eigen::Matrix3d R = rotation_matrix(s.euler);
  const Eigen::Matrix3d Q = euler_rate_matrix(s.euler);
  const Eigen::Vector3d inertia(mp.Ix, mp.Iy, mp.Iz);
  const Eigen::Vector4d w_dot = rotor_accel(s.rotor, u, mp);
  const Eigen::Vector3d moment = body_moment(s, w_dot, mp) + m_ext;
  const Eigen::Vector3d coriolis = s.rates.cross(inertia.cwiseProduct(s.rates));

  Vec16 f;
  f.segment<3>(0) = s.v;
  f.segment<3>(3) = Eigen::Vector3d(0.0, 0.0, kGravity) + R * body_force(s, mp);
  f.segment<3>(6) = Q * s.rates;
  f.segment<3>(9) = (moment - coriolis).cwiseQuotient(inertia);
  f.segment<4>(12) = w_dot;
  return f;
}

Eigen::Vector3d measured_moment(const Eigen::Vector3d& rates, const Eigen::Vector3d& rates_dot,
                                const ModelParams& mp) {
  const Eigen::Vector3d inertia(mp.Ix, mp.Iy, mp.Iz);
  return inertia.cwiseProduct(rates_dot) + rates.cross(inertia.cwiseProduct(rates));
}

double hover_rpm(const ModelParams& mp) { return std::sqrt(kGravity / (4.0 * mp.kw)); }

double hover_command(const ModelParams& mp) {
  return (hover_rpm(mp) - mp.omega_min) / (mp.omega_max - mp.omega_min);
}

}  // namespace quadlab
