#pragma once

#include "quadlab/trajopt/solver.hpp"
#include "quadlab/vehicle/state.hpp"

#include <filesystem>
#include <string>

namespace quadlab {

enum class TerminalKind { HoverRest, WaypointPass };

/// Energy-minimal point-to-point problem for the quadrotor: from x0 to the
/// terminal set at the origin, free final time inside [t_lo, t_hi].
struct OcpSpec {
  ModelParams params;
  VehicleState x0;
  Eigen::Vector3d m_ext = Eigen::Vector3d::Zero();
  TerminalKind terminal = TerminalKind::HoverRest;
  double target_yaw = 0.78539816339744831;  // WaypointPass: 45 deg
  int segments = 30;
  double t_lo = 0.2;
  double t_hi = 10.0;
};

struct OptimalTrajectory {
  Eigen::MatrixXd states;    // (N+1) x 16 node states
  Eigen::MatrixXd controls;  // (N+1) x 4 node controls
  double duration = 0.0;     // T
  double energy = 0.0;       // Simpson integral of ||u||^2
  bool converged = false;
  double max_defect = 0.0;   // scaled constraint inf-norm at the solution
  double kkt_residual = 0.0;
  int outer_iters = 0;
  int inner_iters = 0;
  std::string status;

  int nodes() const { return static_cast<int>(states.rows()); }
  double dt() const { return duration / (states.rows() - 1); }
};

/// Solves the OCP with a hover-seeded initial guess and a deterministic
/// retry ladder (longer/shorter time seeds, stiffer start penalty) on
/// non-convergence. Returns the best attempt; check .converged.
OptimalTrajectory solve_ocp(const OcpSpec& spec, const SolverSettings& settings = {});

/// Fixed trajectory-file schema: t, the 16 state columns, 4 control columns.
extern const std::vector<std::string> kTrajectoryColumns;

void save_trajectory(const std::filesystem::path& path, const OptimalTrajectory& traj);
OptimalTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace quadlab
