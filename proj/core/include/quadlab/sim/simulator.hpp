#pragma once

#include "quadlab/gcnet/policy.hpp"
#include "quadlab/sim/estimator.hpp"
#include "quadlab/sim/waypoints.hpp"
#include "quadlab/vehicle/integrate.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace quadlab {

/// Closed-loop run configuration. Physics advances at dt; sensors and
/// control run on integer subdivisions of it, control no faster than the
/// sensors. Disturbances are constant body-frame moments; the added-weight
/// preset models an asymmetric payload as an extra -0.06 N*m roll moment.
struct SimConfig {
  ModelParams params;
  double dt = 1e-3;          // s physics step
  double control_hz = 100.0;
  double sensor_hz = 500.0;
  double gyro_noise = 0.0;   // rad/s std dev, 0 keeps runs noise-free
  Eigen::Vector3d m_ext = Eigen::Vector3d::Zero();  // injected body moment [N*m]
  bool added_weight = false;
  double duration = 20.0;    // s hard stop even when a lap target is set
  std::uint64_t seed = 1;

  /// Throws ConfigError unless control_hz <= sensor_hz <= 1/dt with both
  /// rates integer divisors of the physics rate and duration > 0.
  void validate() const;

  /// m_ext plus the added-weight roll moment when the preset is on.
  Eigen::Vector3d effective_moment() const;
};

/// Everything recorded during one flight. Control-rate series share index i;
/// sensor-rate series share index j. `diverged` marks a run cut short by the
/// vehicle leaving the 50 m sphere or hitting the Euler singularity; the log
/// still holds everything up to that point.
struct FlightLog {
  // Control-rate series.
  std::vector<double> t;
  Eigen::MatrixXd states;    // 16 x n, packed vehicle states
  Eigen::MatrixXd controls;  // 4 x n, commanded u in [0,1]
  Eigen::MatrixXd m_est;     // 3 x n, estimator output at the tick
  std::vector<int> waypoint;                // active waypoint index
  std::vector<double> energy;               // running integral of ||u||^2

  // Sensor-rate series.
  std::vector<double> sensor_t;
  Eigen::MatrixXd gyro;   // 3 x m, body rates + noise
  Eigen::MatrixXd accel;  // 3 x m, specific force (aero only, no gravity)
  Eigen::MatrixXd rotor;  // 4 x m, true rotor speeds [rpm]
  Eigen::MatrixXd vbody;  // 3 x m, true body-frame velocity

  // Events.
  std::vector<double> lap_times;
  std::vector<double> switch_times;
  std::vector<double> switch_distances;  // |p - waypoint| at each switch
  std::array<long, 4> saturated_ticks = {0, 0, 0, 0};  // control ticks with u_i at a limit
  bool diverged = false;
  std::string reason;
  double duration = 0.0;      // sim seconds actually flown
  double total_energy = 0.0;
  double final_waypoint_distance = 0.0;  // |p - active waypoint| at the last tick
};

/// Fly `policy` around `plan`. At each control tick the active waypoint is
/// updated, network inputs are assembled from the waypoint-relative state
/// (plus the current moment estimate when the policy takes one), and the
/// output is held zero-order until the next tick. `adaptive` must agree with
/// the policy's input layout (DimensionMismatchError otherwise). The rotor
/// envelope is taken from the policy's normalization so flight matches
/// training. Divergence is recorded in the log, not thrown.
FlightLog run_gcnet(const GcnPolicy& policy, const WaypointPlan& plan, const SimConfig& cfg,
                    bool adaptive);

/// Offline measured-vs-modeled comparison at 16 Hz non-causal filtering.
/// All series are sensor-rate and share the log's sensor timestamps.
struct ModelComparison {
  std::vector<double> t;
  Eigen::MatrixXd measured_moment, modeled_moment, residual_moment;  // 3 x m
  Eigen::MatrixXd measured_force, modeled_force, residual_force;    // 3 x m
};

/// Filter the logged gyro/accelerometer streams non-causally, rebuild the
/// rigid-body moment and specific force they imply, and subtract what the
/// rotor/airspeed model predicts. Residuals expose unmodeled moments.
ModelComparison compare_measured_modeled(const FlightLog& log, const ModelParams& params);

/// Write log.csv (control rate), sensors.csv (sensor rate), and summary.json
/// under dir. Column names are stable for external plotting.
void save_flight_log(const FlightLog& log, const std::filesystem::path& dir);

}  // namespace quadlab
