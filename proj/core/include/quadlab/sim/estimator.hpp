#pragma once

#include "quadlab/filters/butterworth.hpp"
#include "quadlab/vehicle/dynamics.hpp"

#include <Eigen/Dense>

namespace quadlab {

/// Causal external-moment observer: the gyro stream is low-pass filtered per
/// axis, differentiated by first differences, and the rigid-body moment
/// recovered from it has the rotor/airspeed moment model subtracted. What
/// remains is the moment the model does not explain.
///
/// The yaw-rate feedthrough of the moment model is evaluated on the filtered
/// rate so both sides of the subtraction see the same signal. Filters are
/// primed on the first sample; derivative states start at zero.
class MomentEstimator {
 public:
  /// Throws NyquistViolationError unless 0 < cutoff < sensor rate / 2.
  MomentEstimator(const ModelParams& params, double sensor_hz, double cutoff_hz = 8.0);

  /// Consume one sensor frame (body rates, rotor speeds, body velocity) and
  /// return the current external-moment estimate.
  Eigen::Vector3d step(const Eigen::Vector3d& gyro, const Eigen::Vector4d& rotor,
                       const Eigen::Vector3d& v_body);

  void reset();

  double sensor_hz() const { return fs_; }

 private:
  ModelParams params_;
  double fs_ = 0.0;
  ButterworthLp2 lp_[3];
  bool primed_ = false;
  Eigen::Vector3d omega_f_prev_ = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotor_prev_ = Eigen::Vector4d::Zero();
};

/// Batch form: run a fresh estimator across time-aligned sensor columns.
/// Returns a 3 x n estimate stream. Throws DimensionMismatchError when the
/// streams disagree in length or row count.
Eigen::MatrixXd estimate_external_moment(const Eigen::MatrixXd& gyro, const Eigen::MatrixXd& rotor,
                                         const Eigen::MatrixXd& v_body, double sensor_hz,
                                         const ModelParams& params);

}  // namespace quadlab
