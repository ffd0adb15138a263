#include "quadlab/common.hpp"
#include "quadlab/vehicle/dynamics.hpp"

#include <cmath>

namespace quadlab {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

}  // namespace

void dynamics_jacobians(const VehicleState& s, const Eigen::Vector4d& u, const ModelParams& mp,
                        Eigen::Matrix<double, 16, 16>& A, Eigen::Matrix<double, 16, 4>& B) {
  (void)u;  // f is affine in u; B depends only on constants
  A.setZero();
  B.setZero();

  const double cph = std::cos(s.euler.x()), sph = std::sin(s.euler.x());
  const double cth = std::cos(s.euler.y()), sth = std::sin(s.euler.y());
  const double cps = std::cos(s.euler.z()), sps = std::sin(s.euler.z());

  const Eigen::Matrix3d R = rotation_matrix(s.euler);
  // d(R)/d(phi) column identities: col1 -> col2 of R, col2 -> -col1 of R.
  Eigen::Matrix3d dR[3];
  dR[0].setZero();
  dR[0].col(1) = R.col(2);
  dR[0].col(2) = -R.col(1);
  dR[1] << -sth * cps, sph * cth * cps, cph * cth * cps,
           -sth * sps, sph * cth * sps, cph * cth * sps,
           -cth,       -sph * sth,      -cph * sth;
  dR[2].setZero();
  dR[2].row(0) = -R.row(1);
  dR[2].row(1) = R.row(0);

  const Eigen::Vector3d vb = R.transpose() * s.v;
  const Eigen::Vector4d& w = s.rotor;
  const double sum_w = w.sum();

  Eigen::Matrix3d dF_dvb;
  dF_dvb << -mp.kx * sum_w, 0.0, 0.0,
            0.0, -mp.ky * sum_w, 0.0,
            -2.0 * mp.kh * vb.x(), -2.0 * mp.kh * vb.y(), -mp.kz * sum_w;
  Eigen::Matrix<double, 3, 4> dF_dw;
  for (int i = 0; i < 4; ++i) {
    dF_dw.col(i) << -mp.kx * vb.x(), -mp.ky * vb.y(), -2.0 * mp.kw * w(i) - mp.kz * vb.z();
  }
  const Eigen::Vector3d F = body_force(s, mp);

  // Position rows.
  A.block<3, 3>(0, 3).setIdentity();

  // Velocity rows: vdot = g + R * F(vb, w), vb = R^T v.
  A.block<3, 3>(3, 3) = R * dF_dvb * R.transpose();
  for (int i = 0; i < 3; ++i) {
    A.block<3, 1>(3, 6 + i) = dR[i] * F + R * dF_dvb * (dR[i].transpose() * s.v);
  }
  A.block<3, 4>(3, 12) = R * dF_dw;

  // Euler rows: lambdadot = Q(lambda) * rates.
  const Eigen::Matrix3d Q = euler_rate_matrix(s.euler);
  const double tth = sth / cth;
  Eigen::Matrix3d dQ_dphi, dQ_dtheta;
  dQ_dphi << 0.0, cph * tth, -sph * tth,
             0.0, -sph, -cph,
             0.0, cph / cth, -sph / cth;
  const double sec2 = 1.0 / (cth * cth);
  dQ_dtheta << 0.0, sph * sec2, cph * sec2,
               0.0, 0.0, 0.0,
               0.0, sph * sth * sec2, cph * sth * sec2;
  A.block<3, 1>(6, 6) = dQ_dphi * s.rates;
  A.block<3, 1>(6, 7) = dQ_dtheta * s.rates;
  A.block<3, 3>(6, 9) = Q;

  // Body-rate rows: ratesdot = Iinv * (-rates x I rates + M + m_ext).
  const Eigen::Vector3d inertia(mp.Ix, mp.Iy, mp.Iz);
  const Eigen::Matrix3d Iinv = inertia.cwiseInverse().asDiagonal();
  Eigen::Matrix3d dM_dvb = Eigen::Matrix3d::Zero();
  dM_dvb(0, 1) = mp.kpv;
  dM_dvb(1, 0) = mp.kqv;
  A.block<3, 3>(9, 3) = Iinv * dM_dvb * R.transpose();
  for (int i = 0; i < 3; ++i) {
    A.block<3, 1>(9, 6 + i) = Iinv * dM_dvb * (dR[i].transpose() * s.v);
  }
  Eigen::Matrix3d dCor = -skew(s.rates) * Eigen::Matrix3d(inertia.asDiagonal()) +
                         skew(inertia.cwiseProduct(s.rates));
  dCor(2, 2) -= mp.krr;  // yaw damping term of the moment model
  A.block<3, 3>(9, 9) = Iinv * dCor;

  const Eigen::Vector4d sx(1.0, -1.0, -1.0, 1.0);
  const Eigen::Vector4d sy(1.0, 1.0, -1.0, -1.0);
  const Eigen::Vector4d sz(-1.0, 1.0, -1.0, 1.0);
  Eigen::Matrix<double, 3, 4> dM_dw;
  dM_dw.row(0) = 2.0 * mp.kp * sx.cwiseProduct(w).transpose();
  dM_dw.row(1) = 2.0 * mp.kq * sy.cwiseProduct(w).transpose();
  // Mz depends on w directly and through rotor_accel = (cmd - w) / tau.
  dM_dw.row(2) = (mp.kr1 - mp.kr2 / mp.tau) * sz.transpose();
  A.block<3, 4>(9, 12) = Iinv * dM_dw;

  const double range = mp.omega_max - mp.omega_min;
  B.block<1, 4>(11, 0) = (mp.kr2 * range / (mp.tau * mp.Iz)) * sz.transpose();

  // Rotor rows: first-order lag.
  A.block<4, 4>(12, 12) = (-1.0 / mp.tau) * Eigen::Matrix4d::Identity();
  B.block<4, 4>(12, 0) = (range / mp.tau) * Eigen::Matrix4d::Identity();
}

}  // namespace quadlab
