#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

namespace quadlab {

/// One waypoint visit of a snap problem. Position is always pinned; the
/// optional fields pin yaw or full derivatives at the visit. `align_velocity`
/// adds the planar constraint vy*cos(yaw) = vx*sin(yaw) and requires `yaw`.
struct SnapWaypoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::optional<double> yaw;
  bool align_velocity = false;
  std::optional<Eigen::Vector3d> velocity;
  std::optional<Eigen::Vector3d> acceleration;
  std::optional<Eigen::Vector3d> jerk;
};

/// Piecewise-polynomial trajectory generation problem: visits joined by
/// fixed-duration segments, one polynomial of the given order per segment
/// and axis, minimizing mu_r * snap of x,y,z plus mu_psi * yaw acceleration.
struct SnapProblem {
  std::vector<SnapWaypoint> visits;
  std::vector<double> segment_times;  // one per segment, all positive
  int order = 6;
  double mu_r = 1.0;
  double mu_psi = 0.1;

  /// Throws ConfigError on fewer than two visits, mismatched segment count,
  /// non-positive times, order below 4, or alignment without a pinned yaw.
  void validate() const;
};

/// Solved trajectory: per-axis coefficient matrices in local segment time,
/// coefficient j multiplying s^j for s in [0, duration_k]. x,y,z are C4 and
/// yaw is C2 across interior knots.
struct PolyTrajectory {
  int order = 0;
  std::vector<double> times;               // segment durations
  std::array<Eigen::MatrixXd, 4> axis;     // (order+1) x segments; x,y,z,yaw
  double total_time = 0.0;

  /// Value (or time derivative of the given order) of [x,y,z,yaw] at t.
  /// Clamps t to [0, total_time], so sampling past the end holds the
  /// terminal point.
  Eigen::Vector4d sample(double t, int derivative = 0) const;

  /// Segment index containing t (last segment for t >= total_time).
  int segment_at(double t) const;
};

/// Minimize the snap objective subject to all visit pins plus C4 (x,y,z) and
/// C2 (yaw) continuity, as one sparse equality-constrained QP solved through
/// its KKT system. Throws SingularKktError when the constraints exceed the
/// free coefficients or the KKT matrix cannot be factored to tolerance.
PolyTrajectory solve_min_snap(const SnapProblem& problem);

/// Exact reparameterization p(alpha*t): durations shrink by alpha and the
/// coefficient of s^j scales by alpha^j. Throws ConfigError on alpha <= 0.
PolyTrajectory time_scale(const PolyTrajectory& traj, double alpha);

/// Integral of the squared fourth derivative of x, y, z over the whole
/// trajectory (the mu_r part of the objective at unit weight).
double position_snap_cost(const PolyTrajectory& traj);

/// Snap problem for the 3 m x 4 m rectangle: hover start at the origin
/// corner, then `laps` rounds of the four corners with uniform segment
/// times summing to total_time. Corner visits pin yaw to 45 deg plus 90 deg
/// per visit (unwrapped, so yaw winds monotonically) and align velocity
/// with the yaw heading.
SnapProblem rectangle_plan(int laps, double total_time);

/// Coefficient-table round trip (CSV, bit-exact doubles).
void save_poly_trajectory(const std::filesystem::path& path, const PolyTrajectory& traj);
PolyTrajectory load_poly_trajectory(const std::filesystem::path& path);

}  // namespace quadlab
