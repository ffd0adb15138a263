#pragma once

#include "quadlab/dfbc/minsnap.hpp"
#include "quadlab/sim/simulator.hpp"

namespace quadlab {

/// Gains of the cascaded flatness tracker. Defaults are tuned for stable
/// rectangle tracking at the slow end of the time-scale sweep; all stages
/// are proportional with polynomial velocity/acceleration feedforward.
struct DfbcGains {
  double kp_pos = 6.0;    // position error -> acceleration [1/s^2]
  double kd_pos = 4.0;    // velocity error -> acceleration [1/s]
  double k_att = 8.0;     // roll/pitch error -> Euler rate [1/s]
  double k_att_yaw = 3.0;  // yaw error -> yaw rate [1/s]; the weak axis
  double k_rate = 20.0;   // rate error -> angular acceleration [1/s]
  int segments_per_lap = 0;  // >0 records lap times from the reference clock
};

/// Track a flat-output trajectory: position PD plus feedforward gives the
/// desired specific force, which fixes thrust and attitude; a proportional
/// attitude loop commands body rates; an incremental rate loop turns the
/// rate error into a moment increment on top of the measured moment and
/// allocates it to rotor-speed increments through the model's control
/// effectiveness. Commands clamp to [0,1] and saturation is logged.
///
/// The run ends at cfg.duration or at the first of: tracking error above
/// 3 m (logged as diverged, the crash analogue), the 50 m sphere, or the
/// Euler singularity. The waypoint column of the log holds the reference
/// segment index.
FlightLog run_dfbc(const PolyTrajectory& traj, const SimConfig& cfg,
                   const DfbcGains& gains = {});

}  // namespace quadlab
