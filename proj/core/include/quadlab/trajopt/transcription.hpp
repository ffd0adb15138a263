#pragma once

#include "quadlab/trajopt/dynamics_model.hpp"
#include "quadlab/trajopt/terminal.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

namespace quadlab {

/// Hermite-Simpson collocation of a free-final-time energy-minimal control
/// problem, compressed form: decision vector z = [x_0..x_N, u_0..u_N, T],
/// midpoint states interpolated from the node values.
///
/// Objective: Simpson quadrature of ||u(t)||^2 over [0, T].
/// Constraints: N defect blocks of state_dim rows each, then the terminal
/// residual rows. The initial state and the pinned terminal entries live in
/// the variable bounds.
///
/// The solver-facing interface is fully scaled: variables are divided by
/// per-entry scales (states by model state_scales, T by t_scale), constraint
/// rows by their row scales. Evaluation workspaces are preallocated, so one
/// instance must not be shared across threads.
class Transcription {
 public:
  Transcription(const DynamicsModel& model, const TerminalCondition& terminal, int segments,
                double t_lo, double t_hi, const Eigen::VectorXd& x0, double t_scale = 1.0);

  int segments() const { return N_; }
  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  int var_count() const { return nz_; }
  int constraint_count() const { return nc_; }

  int x_index(int node) const { return node * n_; }
  int u_index(int node) const { return (N_ + 1) * n_ + node * m_; }
  int t_index() const { return (N_ + 1) * (n_ + m_); }

  /// Variable bounds in scaled coordinates (divide a raw point by
  /// var_scales() before comparing).
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }
  const Eigen::VectorXd& var_scales() const { return scale_; }

  Eigen::VectorXd scale_point(const Eigen::VectorXd& z) const;
  Eigen::VectorXd unscale_point(const Eigen::VectorXd& zeta) const;

  /// Objective value and scaled constraints; no derivatives.
  double eval_fc(const Eigen::VectorXd& zeta, Eigen::VectorXd& c) const;

  /// Objective, scaled gradient and constraints; caches the constraint
  /// Jacobian blocks for apply_jt / dense_jacobian.
  double eval_fcj(const Eigen::VectorXd& zeta, Eigen::VectorXd& grad, Eigen::VectorXd& c);

  /// out = J^T * v in scaled space, using the cached blocks.
  void apply_jt(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;

  /// Scaled dense Jacobian from the cached blocks (small problems / tests).
  Eigen::MatrixXd dense_jacobian() const;

  /// Gauss-Newton model Hessian rho * J^T J plus the exact objective Hessian,
  /// in scaled space, assembled from the blocks cached by the last eval_fcj
  /// (which must have been called at the same point).
  void gn_hessian(const Eigen::VectorXd& zeta, double rho,
                  Eigen::SparseMatrix<double>& h) const;

  /// Unscaled objective at an unscaled point (tests and reporting).
  double objective(const Eigen::VectorXd& z) const;

 private:
  void evaluate_nodes(const Eigen::VectorXd& z, bool with_jacobians);
  double defects(const Eigen::VectorXd& z, Eigen::VectorXd& c, bool with_jacobians);

  const DynamicsModel* model_;
  const TerminalCondition* terminal_;
  int N_, n_, m_, nz_, nc_;
  Eigen::VectorXd lo_, hi_, scale_;
  Eigen::VectorXd row_scale_;  // one entry per constraint row

  // Node and midpoint workspaces.
  Eigen::MatrixXd fx_;                  // n x (N+1)
  std::vector<Eigen::MatrixXd> A_, B_;  // per node
  Eigen::MatrixXd fm_;                  // n x N
  std::vector<Eigen::MatrixXd> Am_, Bm_;

  // Cached defect Jacobian blocks per segment and terminal blocks.
  std::vector<Eigen::MatrixXd> Dx0_, Dx1_, Du0_, Du1_;
  Eigen::MatrixXd DT_;  // n x N
  Eigen::MatrixXd term_Jx_, term_Ju_;
  Eigen::VectorXd xm_, um_;
};

}  // namespace quadlab
