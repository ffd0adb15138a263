#include "quadlab/trajopt/terminal.hpp"

#include "quadlab/common.hpp"

#include <cmath>

namespace quadlab {
namespace {

constexpr int kAccelRows[10] = {3, 4, 5, 9, 10, 11, 12, 13, 14, 15};

}  // namespace

void HoverRestCondition::fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo,
                                    Eigen::Ref<Eigen::VectorXd> x_hi,
                                    Eigen::Ref<Eigen::VectorXd> u_lo,
                                    Eigen::Ref<Eigen::VectorXd> u_hi) const {
  (void)u_lo;
  (void)u_hi;
  x_lo.head<12>().setZero();
  x_hi.head<12>().setZero();
}

void HoverRestCondition::eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& u,
                              Eigen::Ref<Eigen::VectorXd> r) const {
  Eigen::VectorXd f(16);
  model_->derivative(x, u, f);
  for (int i = 0; i < 10; ++i) r(i) = f(kAccelRows[i]);
}

void HoverRestCondition::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& u,
                                  Eigen::Ref<Eigen::MatrixXd> Jx,
                                  Eigen::Ref<Eigen::MatrixXd> Ju) const {
  Eigen::MatrixXd A(16, 16), B(16, 4);
  model_->jacobians(x, u, A, B);
  for (int i = 0; i < 10; ++i) {
    Jx.row(i) = A.row(kAccelRows[i]);
    Ju.row(i) = B.row(kAccelRows[i]);
  }
}

Eigen::VectorXd HoverRestCondition::row_scales() const {
  Eigen::VectorXd s(10);
  s.segment<3>(0).setConstant(kGravity);
  s.segment<3>(3).setConstant(50.0);
  const ModelParams& mp = model_->params();
  s.segment<4>(6).setConstant((mp.omega_max - mp.omega_min) / mp.tau);
  return s;
}

void WaypointPassCondition::fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo,
                                       Eigen::Ref<Eigen::VectorXd> x_hi,
                                       Eigen::Ref<Eigen::VectorXd> u_lo,
                                       Eigen::Ref<Eigen::VectorXd> u_hi) const {
  (void)u_lo;
  (void)u_hi;
  x_lo.head<3>().setZero();
  x_hi.head<3>().setZero();
  x_lo(5) = 0.0;
  x_hi(5) = 0.0;
  x_lo(8) = target_yaw_;
  x_hi(8) = target_yaw_;
  x_lo.segment<3>(9).setZero();
  x_hi.segment<3>(9).setZero();
  if (std::cos(target_yaw_) > 0.1) x_lo(3) = 0.0;  // fly through, not backwards
}

void WaypointPassCondition::eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& u,
                                 Eigen::Ref<Eigen::VectorXd> r) const {
  r(0) = x(4) * std::cos(target_yaw_) - x(3) * std::sin(target_yaw_);
  Eigen::VectorXd f(16);
  model_->derivative(x, u, f);
  r.segment<3>(1) = f.segment<3>(9);
}

void WaypointPassCondition::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& u,
                                     Eigen::Ref<Eigen::MatrixXd> Jx,
                                     Eigen::Ref<Eigen::MatrixXd> Ju) const {
  Jx.setZero();
  Ju.setZero();
  Jx(0, 3) = -std::sin(target_yaw_);
  Jx(0, 4) = std::cos(target_yaw_);
  Eigen::MatrixXd A(16, 16), B(16, 4);
  model_->jacobians(x, u, A, B);
  Jx.block<3, 16>(1, 0) = A.block<3, 16>(9, 0);
  Ju.block<3, 4>(1, 0) = B.block<3, 4>(9, 0);
}

Eigen::VectorXd WaypointPassCondition::row_scales() const {
  Eigen::VectorXd s(4);
  s(0) = 1.0;
  s.segment<3>(1).setConstant(50.0);
  return s;
}

}  // namespace quadlab
