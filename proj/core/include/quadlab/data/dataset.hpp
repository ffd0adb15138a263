#pragma once

#include "quadlab/common.hpp"
#include "quadlab/trajopt/ocp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace quadlab {

/// Closed sampling interval [lo, hi]; lo == hi pins the value.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double sample(SplitMix64& rng) const { return rng.uniform(lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Which state-feedback task a dataset teaches. Nominal and Adaptive share
/// the hover-to-rest target; Adaptive and Waypoint carry external-moment
/// inputs (19-dim network input instead of 16).
enum class RecipeKind { Nominal, Adaptive, Waypoint };

const char* recipe_kind_name(RecipeKind kind);

/// Fixed input scaling recorded in every dataset file so that training and
/// flight assemble identical network inputs.
struct NormalizationSpec {
  double pos = 5.0;         // m
  double vel = 5.0;         // m/s
  double ang = kPi;         // rad
  double rate = 2.0 * kPi;  // rad/s
  double moment = 0.04;     // N*m
  double omega_min = 3000.0;  // rotor speeds map affinely onto [0,1]
  double omega_max = 12000.0;
};

/// Initial-condition distribution plus everything needed to turn a draw into
/// an optimal-control problem. `count` is the working trajectory budget;
/// `paper_count` records the scale of the original experiments.
struct SamplingRecipe {
  RecipeKind kind = RecipeKind::Nominal;
  std::string name;

  Interval x, y, z;           // position [m]
  Interval vx, vy, vz;        // velocity [m/s]
  Interval roll, pitch, yaw;  // attitude [rad]
  Interval p, q, r;           // body rates [rad/s]
  Interval mx, my, mz;        // external moment [N*m]; unused when Nominal

  double omega_min = 3000.0;  // rpm envelope; also the initial-speed interval
  double omega_max = 12000.0;

  TerminalKind terminal = TerminalKind::HoverRest;
  double target_yaw = 0.0;  // WaypointPass only
  int segments = 30;

  std::size_t count = 0;
  std::size_t paper_count = 0;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;

  bool has_moment_inputs() const { return kind != RecipeKind::Nominal; }
  int input_dim() const { return has_moment_inputs() ? 19 : 16; }

  /// Throws InfeasibleBoundsError for an ill-ordered interval, ConfigError
  /// for a bad count/fraction/envelope.
  void validate() const;

  VehicleState sample_state(SplitMix64& rng) const;
  Eigen::Vector3d sample_moment(SplitMix64& rng) const;
  NormalizationSpec normalization() const;
  OcpSpec to_ocp(const VehicleState& x0, const Eigen::Vector3d& m_ext) const;
};

/// The three built-in recipes (nominal, adaptive, waypoint) with working
/// counts sized for a desk run. Scale multiplies the trajectory counts.
std::vector<SamplingRecipe> builtin_recipes(double scale = 1.0);

/// Lookup by name; throws ConfigError for an unknown name.
SamplingRecipe recipe_named(const std::string& name, double scale = 1.0);

struct StateActionPair {
  Eigen::VectorXd input;
  Eigen::Vector4d target;  // optimal normalized rpm command, in [0,1]^4
};

/// Columnar in-memory dataset: one column per pair.
struct Dataset {
  RecipeKind kind = RecipeKind::Nominal;
  NormalizationSpec norm;
  Eigen::MatrixXd inputs;                            // dim x pairs
  Eigen::Matrix<double, 4, Eigen::Dynamic> targets;  // 4 x pairs

  Eigen::Index size() const { return inputs.cols(); }
  int dim() const { return static_cast<int>(inputs.rows()); }
  StateActionPair pair(Eigen::Index i) const { return {inputs.col(i), targets.col(i)}; }
};

/// Binary container: text header (magic/version/kind/dim/counts/
/// normalization), then raw little-endian doubles, inputs block first.
void save_dataset(const std::filesystem::path& path, const Dataset& d);

/// Throws VersionMismatchError for a foreign magic/version and
/// CorruptFileError for anything truncated or inconsistent.
Dataset load_dataset(const std::filesystem::path& path);

/// Builds the network input vector from a vehicle state: positions relative
/// to `waypoint` (defaults to the origin), fixed normalization from `norm`,
/// external-moment block appended for the 19-dim kinds. Throws
/// DimensionMismatchError when `m_ext` presence contradicts `kind`.
Eigen::VectorXd assemble_inputs(const VehicleState& state,
                                const std::optional<Eigen::Vector3d>& m_ext,
                                const std::optional<Eigen::Vector3d>& waypoint, RecipeKind kind,
                                const NormalizationSpec& norm);

struct GenerationReport {
  std::size_t attempted = 0;  // OCP solves launched, resamples included
  std::size_t converged = 0;  // solves that converged (== trajectories kept)
  std::size_t kept = 0;
  std::size_t train_trajectories = 0;
  std::size_t test_trajectories = 0;
  double elapsed_seconds = 0.0;  // wall time; never serialized
};

struct GenerationResult {
  Dataset train;
  Dataset test;
  GenerationReport report;
};

/// Samples `recipe.count` initial conditions, solves each OCP, and emits the
/// N+1 state-action pairs of every converged trajectory. A failed solve is
/// redrawn once from a fresh substream; the split is by trajectory. The
/// result is a deterministic function of the recipe alone: per-trajectory
/// RNG substreams make it independent of `workers`. Throws
/// ConvergenceRateError when fewer than 80% of trajectories survive.
GenerationResult generate(const SamplingRecipe& recipe, int workers = 1,
                          const SolverSettings& solver = {});

/// Writes train.qld, test.qld, and manifest.json under `dir`.
void write_generated(const std::filesystem::path& dir, const SamplingRecipe& recipe,
                     const GenerationResult& result);

}  // namespace quadlab
