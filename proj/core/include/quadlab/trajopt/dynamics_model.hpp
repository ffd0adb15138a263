#pragma once

#include "quadlab/vehicle/dynamics.hpp"

#include <Eigen/Dense>

namespace quadlab {

/// Continuous-time dynamics plugged into the collocation transcription.
/// Implementations must be total on the box given by state_box/control_box
/// (no throwing on interior evaluation points such as Hermite midpoints).
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  virtual void derivative(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& u,
                          Eigen::Ref<Eigen::VectorXd> f) const = 0;

  virtual void jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& u,
                         Eigen::Ref<Eigen::MatrixXd> A, Eigen::Ref<Eigen::MatrixXd> B) const = 0;

  virtual void state_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const = 0;
  virtual void control_box(Eigen::Ref<Eigen::VectorXd> lo,
                           Eigen::Ref<Eigen::VectorXd> hi) const = 0;

  /// Per-state magnitudes used to scale decision variables and defect rows.
  virtual Eigen::VectorXd state_scales() const = 0;
};

/// Quadrotor dynamics with a constant external body moment. The Euler
/// kinematics are clamped (not thrown) near the pitch singularity so the
/// model stays total on midpoint states; node pitch is boxed well away
/// from the singularity.
class QuadModel : public DynamicsModel {
 public:
  QuadModel(const ModelParams& params, const Eigen::Vector3d& m_ext);

  int state_dim() const override { return VehicleState::kDim; }
  int control_dim() const override { return 4; }
  void derivative(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& u,
                  Eigen::Ref<Eigen::VectorXd> f) const override;
  void jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::MatrixXd> A,
                 Eigen::Ref<Eigen::MatrixXd> B) const override;
  void state_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const override;
  void control_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const override;
  Eigen::VectorXd state_scales() const override;

  const ModelParams& params() const { return params_; }
  const Eigen::Vector3d& external_moment() const { return m_ext_; }

  // Solver boxes; generous enough to stay inactive at any sane optimum.
  double pos_limit = 50.0;          // [m]
  double speed_limit = 25.0;        // [m/s]
  double tilt_limit = 1.4835298641951802;  // 85 deg [rad]
  double yaw_limit = 2.0 * 3.14159265358979323846;
  double rate_limit = 25.0;         // [rad/s]

 private:
  ModelParams params_;
  Eigen::Vector3d m_ext_;
};

/// 1-D double integrator; exercises the transcription and solver against
/// closed-form optima.
class PointMassModel : public DynamicsModel {
 public:
  explicit PointMassModel(double control_limit = 20.0, double pos_limit = 50.0)
      : control_limit_(control_limit), pos_limit_(pos_limit) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  void derivative(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& u,
                  Eigen::Ref<Eigen::VectorXd> f) const override;
  void jacobians(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::MatrixXd> A,
                 Eigen::Ref<Eigen::MatrixXd> B) const override;
  void state_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const override;
  void control_box(Eigen::Ref<Eigen::VectorXd> lo, Eigen::Ref<Eigen::VectorXd> hi) const override;
  Eigen::VectorXd state_scales() const override;

 private:
  double control_limit_;
  double pos_limit_;
};

}  // namespace quadlab
