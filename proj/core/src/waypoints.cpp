#include "quadlab/sim/waypoints.hpp"

#include "quadlab/common.hpp"

namespace quadlab {

void WaypointPlan::validate() const {
  if (points.empty()) throw ConfigError("waypoint plan has no points");
  if (policy == SwitchPolicy::Timed && period <= 0.0)
    throw ConfigError("timed switch period must be positive");
  if (policy == SwitchPolicy::Proximity && radius <= 0.0)
    throw ConfigError("proximity switch radius must be positive");
  if (laps < 0) throw ConfigError("lap count must be non-negative");
}

WaypointPlan rectangle_plan(int laps, SwitchPolicy policy) {
  const double z = -1.5;
  WaypointPlan plan;
  plan.points = {Eigen::Vector3d(4.0, 0.0, z), Eigen::Vector3d(4.0, 3.0, z),
                 Eigen::Vector3d(0.0, 3.0, z), Eigen::Vector3d(0.0, 0.0, z)};
  plan.start_position = Eigen::Vector3d(0.0, 0.0, z);
  plan.start_yaw = 0.0;
  plan.policy = policy;
  plan.laps = laps;
  return plan;
}

VehicleState frame_switch(const VehicleState& s, const Eigen::Vector3d& waypoint,
                          int view_index) {
  const double ang = -0.5 * kPi * static_cast<double>(view_index);
  const double c = std::cos(ang);
  const double sn = std::sin(ang);
  Eigen::Matrix3d rz;
  rz << c, -sn, 0.0, sn, c, 0.0, 0.0, 0.0, 1.0;

  VehicleState out = s;
  out.p = rz * (s.p - waypoint);
  out.v = rz * s.v;
  out.euler.z() = wrap_angle(s.euler.z() + ang);
  return out;
}

}  // namespace quadlab
