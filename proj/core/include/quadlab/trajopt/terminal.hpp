#pragma once

#include "quadlab/trajopt/dynamics_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace quadlab {

/// Terminal condition at the final node, expressed as a mix of pinned
/// variables (folded into the box bounds) and residual equality rows on
/// (x_N, u_N).
class TerminalCondition {
 public:
  virtual ~TerminalCondition() = default;

  virtual int rows() const = 0;

  /// Tighten the final-node boxes; lo/hi arrive as the model-wide boxes.
  virtual void fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo, Eigen::Ref<Eigen::VectorXd> x_hi,
                          Eigen::Ref<Eigen::VectorXd> u_lo,
                          Eigen::Ref<Eigen::VectorXd> u_hi) const = 0;

  virtual void eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& u,
                    Eigen::Ref<Eigen::VectorXd> r) const = 0;

  virtual void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::MatrixXd> Jx,
                        Eigen::Ref<Eigen::MatrixXd> Ju) const = 0;

  /// Magnitude of each residual row, for constraint scaling.
  virtual Eigen::VectorXd row_scales() const = 0;
};

/// Pins a subset of the final state to fixed values. No residual rows.
class FixedStateCondition : public TerminalCondition {
 public:
  FixedStateCondition(Eigen::VectorXd values, std::vector<int> indices)
      : values_(std::move(values)), indices_(std::move(indices)) {}

  int rows() const override { return 0; }
  void fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo, Eigen::Ref<Eigen::VectorXd> x_hi,
                  Eigen::Ref<Eigen::VectorXd>, Eigen::Ref<Eigen::VectorXd>) const override {
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      x_lo(indices_[i]) = values_(static_cast<Eigen::Index>(i));
      x_hi(indices_[i]) = values_(static_cast<Eigen::Index>(i));
    }
  }
  void eval(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&,
            Eigen::Ref<Eigen::VectorXd>) const override {}
  void jacobian(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&,
                Eigen::Ref<Eigen::MatrixXd>, Eigen::Ref<Eigen::MatrixXd>) const override {}
  Eigen::VectorXd row_scales() const override { return Eigen::VectorXd(); }

 private:
  Eigen::VectorXd values_;
  std::vector<int> indices_;
};

/// Exact hover equilibrium at the origin: p, v, euler, rates pinned to zero
/// and the acceleration rows of the dynamics (vdot, ratesdot, rotordot)
/// constrained to vanish, which ties the final rotor speeds and controls to
/// the hover equilibrium that balances any external moment.
class HoverRestCondition : public TerminalCondition {
 public:
  explicit HoverRestCondition(const QuadModel& model) : model_(&model) {}

  int rows() const override { return 10; }
  void fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo, Eigen::Ref<Eigen::VectorXd> x_hi,
                  Eigen::Ref<Eigen::VectorXd> u_lo,
                  Eigen::Ref<Eigen::VectorXd> u_hi) const override;
  void eval(const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& u,
            Eigen::Ref<Eigen::VectorXd> r) const override;
  void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::MatrixXd> Jx,
                Eigen::Ref<Eigen::MatrixXd> Ju) const override;
  Eigen::VectorXd row_scales() const override;

 private:
  const QuadModel* model_;
};

/// Waypoint fly-through: position at the origin, level flight path through
/// the gate with velocity aligned to the target yaw, zero body rates and
/// zero body-rate acceleration. Roll, pitch, rotor speeds and the
/// along-track speed stay free (the along-track speed is kept non-negative).
class WaypointPassCondition : public TerminalCondition {
 public:
  WaypointPassCondition(const QuadModel& model, double target_yaw)
      : model_(&model), target_yaw_(target_yaw) {}

  int rows() const override { return 4; }
  void fix_bounds(Eigen::Ref<Eigen::VectorXd> x_lo, Eigen::Ref<Eigen::VectorXd> x_hi,
                  Eigen::Ref<Eigen::VectorXd> u_lo,
                  Eigen::Ref<Eigen::VectorXd> u_hi) const override;
  void eval(const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& u,
            Eigen::Ref<Eigen::VectorXd> r) const override;
  void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::MatrixXd> Jx,
                Eigen::Ref<Eigen::MatrixXd> Ju) const override;
  Eigen::VectorXd row_scales() const override;

  double target_yaw() const { return target_yaw_; }

 private:
  const QuadModel* model_;
  double target_yaw_;
};

}  // namespace quadlab
