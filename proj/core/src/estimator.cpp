#include "quadlab/sim/estimator.hpp"

#include "quadlab/common.hpp"

namespace quadlab {

MomentEstimator::MomentEstimator(const ModelParams& params, double sensor_hz, double cutoff_hz)
    : params_(params), fs_(sensor_hz) {
  for (auto& lp : lp_) lp = design_lowpass(cutoff_hz, sensor_hz);
}

void MomentEstimator::reset() {
  for (auto& lp : lp_) lp.reset();
  primed_ = false;
  omega_f_prev_.setZero();
  rotor_prev_.setZero();
}

Eigen::Vector3d MomentEstimator::step(const Eigen::Vector3d& gyro, const Eigen::Vector4d& rotor,
                                      const Eigen::Vector3d& v_body) {
  if (!primed_) {
    for (int i = 0; i < 3; ++i) lp_[i].prime(gyro(i));
  }
  Eigen::Vector3d omega_f;
  for (int i = 0; i < 3; ++i) omega_f(i) = lp_[i].step(gyro(i));

  Eigen::Vector3d omega_f_dot = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotor_dot = Eigen::Vector4d::Zero();
  if (primed_) {
    omega_f_dot = (omega_f - omega_f_prev_) * fs_;
    rotor_dot = (rotor - rotor_prev_) * fs_;
  }
  primed_ = true;
  omega_f_prev_ = omega_f;
  rotor_prev_ = rotor;

  const Eigen::Vector3d modeled = body_moment(rotor, rotor_dot, v_body, omega_f.z(), params_);
  return measured_moment(omega_f, omega_f_dot, params_) - modeled;
}

Eigen::MatrixXd estimate_external_moment(const Eigen::MatrixXd& gyro, const Eigen::MatrixXd& rotor,
                                         const Eigen::MatrixXd& v_body, double sensor_hz,
                                         const ModelParams& params) {
  if (gyro.rows() != 3 || rotor.rows() != 4 || v_body.rows() != 3)
    throw DimensionMismatchError("sensor streams must be 3/4/3 rows");
  if (gyro.cols() != rotor.cols() || gyro.cols() != v_body.cols())
    throw DimensionMismatchError("sensor streams must be time-aligned");

  MomentEstimator est(params, sensor_hz);
  Eigen::MatrixXd out(3, gyro.cols());
  for (Eigen::Index j = 0; j < gyro.cols(); ++j)
    out.col(j) = est.step(gyro.col(j), rotor.col(j), v_body.col(j));
  return out;
}

}  // namespace quadlab
