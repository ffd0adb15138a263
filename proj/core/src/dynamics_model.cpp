#include "quadlab/trajopt/dynamics_model.hpp"

#include "quadlab/common.hpp"

#include <cmath>

namespace quadlab {
namespace {

// Euler kinematics with |cos(pitch)| floored, so that midpoint states that
// momentarily overshoot the node pitch box cannot blow up the evaluation.
constexpr double kCosFloor = 0.017452406437283512;  // cos(89 deg)

Eigen::Matrix3d euler_rate_matrix_clamped(const Eigen::Vector3d& euler) {
  const double cph = std::cos(euler.x()), sph = std::sin(euler.x());
  double cth = std::cos(euler.y());
  const double sth = std::sin(euler.y());
  if (std::abs(cth) < kCosFloor) cth = (cth < 0.0 ? -kCosFloor : kCosFloor);
  const double tth = sth / cth;
  Eigen::Matrix3d Q;
  Q << 1.0, sph * tth, cph * tth,
       0.0, cph,       -sph,
       0.0, sph / cth, cph / cth;
  return Q;
}

bool pitch_clamped(double pitch) { return std::abs(std::cos(pitch)) < kCosFloor; }

}  // namespace

QuadModel::QuadModel(const ModelParams& params, const Eigen::Vector3d& m_ext)
    : params_(params), m_ext_(m_ext) {
  params_.validate();
}

void QuadModel::derivative(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u,
                           Eigen::Ref<Eigen::VectorXd> f) const {
  const VehicleState s = VehicleState::unpack(x);
  if (pitch_clamped(s.euler.y())) {
    // Same derivative with the clamped kinematics spliced in.
    const Eigen::Matrix3d R = rotation_matrix(s.euler);
    const Eigen::Matrix3d Q = euler_rate_matrix_clamped(s.euler);
    const Eigen::Vector3d inertia(params_.Ix, params_.Iy, params_.Iz);
    const Eigen::Vector4d w_dot = rotor_accel(s.rotor, u, params_);
    const Eigen::Vector3d moment = body_moment(s, w_dot, params_) + m_ext_;
    f.segment<3>(0) = s.v;
    f.segment<3>(3) = Eigen::Vector3d(0.0, 0.0, kGravity) + R * body_force(s, params_);
    f.segment<3>(6) = Q * s.rates;
    f.segment<3>(9) =
        (moment - s.rates.cross(inertia.cwiseProduct(s.rates))).cwiseQuotient(inertia);
    f.segment<4>(12) = w_dot;
    return;
  }
  f = state_derivative(s, u, m_ext_, params_);
}

void QuadModel::jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& u,
                          Eigen::Ref<Eigen::MatrixXd> A, Eigen::Ref<Eigen::MatrixXd> B) const {
  VehicleState s = VehicleState::unpack(x);
  if (pitch_clamped(s.euler.y())) {
    // Freeze pitch at the clamp boundary for the derivative blocks,
    // preserving the signs of both sin and cos; the region is never active
    // at a converged solution.
    const double cth = std::cos(s.euler.y());
    s.euler.y() = std::atan2(std::sin(s.euler.y()), cth < 0.0 ? -kCosFloor : kCosFloor);
  }
  Eigen::Matrix<double, 16, 16> As;
  Eigen::Matrix<double, 16, 4> Bs;
  dynamics_jacobians(s, u, params_, As, Bs);
  A = As;
  B = Bs;
}

void QuadModel::state_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const {
  lo.segment<3>(0).setConstant(-pos_limit);
  hi.segment<3>(0).setConstant(pos_limit);
  lo.segment<3>(3).setConstant(-speed_limit);
  hi.segment<3>(3).setConstant(speed_limit);
  lo.segment<2>(6).setConstant(-tilt_limit);
  hi.segment<2>(6).setConstant(tilt_limit);
  lo(8) = -yaw_limit;
  hi(8) = yaw_limit;
  lo.segment<3>(9).setConstant(-rate_limit);
  hi.segment<3>(9).setConstant(rate_limit);
  lo.segment<4>(12).setConstant(params_.omega_min);
  hi.segment<4>(12).setConstant(params_.omega_max);
}

void QuadModel::control_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const {
  lo.setZero();
  hi.setOnes();
}

Eigen::VectorXd QuadModel::state_scales() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(16);
  s.segment<4>(12).setConstant(params_.omega_max);
  return s;
}

void PointMassModel::derivative(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                Eigen::Ref<Eigen::VectorXd> f) const {
  f(0) = x(1);
  f(1) = u(0);
}

void PointMassModel::jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& u,
                               Eigen::Ref<Eigen::MatrixXd> A, Eigen::Ref<Eigen::MatrixXd> B) const {
  (void)x;
  (void)u;
  A.setZero();
  A(0, 1) = 1.0;
  B.setZero();
  B(1, 0) = 1.0;
}

void PointMassModel::state_box(Eigen::Ref<Eigen::VectorXd> lo,
                               Eigen::Ref<Eigen::VectorXd> hi) const {
  lo.setConstant(-pos_limit_);
  hi.setConstant(pos_limit_);
}

void PointMassModel::control_box(Eigen::Ref<Eigen::VectorXd> lo,
                                 Eigen::Ref<Eigen::VectorXd> hi) const {
  lo.setConstant(-control_limit_);
  hi.setConstant(control_limit_);
}

Eigen::VectorXd PointMassModel::state_scales() const { return Eigen::VectorXd::Ones(2); }

}  // namespace quadlab
