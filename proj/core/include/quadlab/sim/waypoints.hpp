#pragma once

#include "quadlab/vehicle/state.hpp"

#include <Eigen/Dense>

#include <vector>

namespace quadlab {

/// How the active waypoint advances during closed-loop flight. Timed rotates
/// the target on a fixed period and only shifts the input-assembly origin;
/// Proximity advances on a distance trigger and additionally rotates the
/// network's view frame by -90 degrees per switch.
enum class SwitchPolicy { Timed, Proximity };

/// Cyclic waypoint sequence plus the switching rule. A lap completes every
/// time the active index wraps back to the first waypoint.
struct WaypointPlan {
  std::vector<Eigen::Vector3d> points;
  Eigen::Vector3d start_position = Eigen::Vector3d::Zero();
  double start_yaw = 0.0;
  SwitchPolicy policy = SwitchPolicy::Timed;
  double period = 4.0;  // s between Timed switches
  double radius = 1.2;  // m Proximity trigger distance
  int laps = 0;         // stop after this many laps; 0 = run to duration

  /// Throws ConfigError on an empty plan or non-positive period/radius.
  void validate() const;
};

/// Four corners of a 3 m x 4 m rectangle at 1.5 m altitude, starting from
/// the last corner so the first leg runs 4 m along +x.
WaypointPlan rectangle_plan(int laps, SwitchPolicy policy);

/// State as seen from view frame `view_index`: position is taken relative to
/// `waypoint` and rotated with the velocity by -90 deg * view_index about z;
/// yaw is decremented by the same angle and rewrapped. Roll, pitch, body
/// rates, and rotor speeds are frame-invariant and pass through.
VehicleState frame_switch(const VehicleState& s, const Eigen::Vector3d& waypoint, int view_index);

}  // namespace quadlab
