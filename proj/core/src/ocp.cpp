#include "quadlab/trajopt/ocp.hpp"

#include "quadlab/common.hpp"
#include "quadlab/csv.hpp"
#include "quadlab/trajopt/terminal.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace quadlab {

const std::vector<std::string> kTrajectoryColumns = {
    "t",  "x",  "y",  "z",  "vx", "vy", "vz", "phi", "theta", "psi", "p",
    "q",  "r",  "w1", "w2", "w3", "w4", "u1", "u2",  "u3",    "u4"};

namespace {

Vec16 target_state_guess(const OcpSpec& spec) {
  VehicleState t;
  const double wh = hover_rpm(spec.params);
  t.rotor.setConstant(wh);
  if (spec.terminal == TerminalKind::WaypointPass) {
    t.euler.z() = spec.target_yaw;
    t.v << 2.0 * std::cos(spec.target_yaw), 2.0 * std::sin(spec.target_yaw), 0.0;
  }
  return t.pack();
}

Eigen::VectorXd build_guess(const Transcription& nlp, const OcpSpec& spec, double t_guess) {
  const int N = nlp.segments();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(nlp.var_count());
  const Vec16 x0 = spec.x0.pack();
  const Vec16 xT = target_state_guess(spec);
  const double uh = hover_command(spec.params);
  for (int k = 0; k <= N; ++k) {
    const double a = static_cast<double>(k) / N;
    z.segment(nlp.x_index(k), 16) = (1.0 - a) * x0 + a * xT;
    z.segment(nlp.u_index(k), 4).setConstant(uh);
  }
  z(nlp.t_index()) = t_guess;
  return z;
}

OptimalTrajectory extract(const Transcription& nlp, const NlpResult& res) {
  const Eigen::VectorXd z = nlp.unscale_point(res.zeta);
  const int N = nlp.segments();
  OptimalTrajectory traj;
  traj.states.resize(N + 1, 16);
  traj.controls.resize(N + 1, 4);
  for (int k = 0; k <= N; ++k) {
    traj.states.row(k) = z.segment(nlp.x_index(k), 16).transpose();
    traj.controls.row(k) = z.segment(nlp.u_index(k), 4).transpose();
  }
  traj.duration = z(nlp.t_index());
  traj.energy = nlp.objective(z);
  traj.converged = res.status == SolveStatus::Converged;
  traj.max_defect = res.feasibility;
  traj.kkt_residual = res.kkt;
  traj.outer_iters = res.outer_iters;
  traj.inner_iters = res.inner_iters;
  traj.status = to_string(res.status);
  return traj;
}

}  // namespace

OptimalTrajectory solve_ocp(const OcpSpec& spec, const SolverSettings& settings) {
  const QuadModel model(spec.params, spec.m_ext);
  std::unique_ptr<TerminalCondition> term;
  if (spec.terminal == TerminalKind::HoverRest) {
    term = std::make_unique<HoverRestCondition>(model);
  } else {
    term = std::make_unique<WaypointPassCondition>(model, spec.target_yaw);
  }

  const double dist = spec.x0.p.norm();
  const double t_base = std::clamp(std::max(1.0, dist / 2.0), spec.t_lo, spec.t_hi);

  struct Attempt {
    double t_factor;
    double rho_factor;
    double inner_factor;
  };
  constexpr Attempt attempts[] = {{1.0, 1.0, 1.0}, {1.6, 10.0, 1.5}, {0.6, 1.0, 2.0}};

  OptimalTrajectory best;
  bool have_best = false;
  for (const Attempt& a : attempts) {
    const double t_guess = std::clamp(t_base * a.t_factor, spec.t_lo, spec.t_hi);
    Transcription nlp(model, *term, spec.segments, spec.t_lo, spec.t_hi, spec.x0.pack(),
                      t_guess);
    SolverSettings s = settings;
    s.rho0 = settings.rho0 * a.rho_factor;
    s.inner_round = static_cast<int>(settings.inner_round * a.inner_factor);
    s.max_inner_total = static_cast<int>(settings.max_inner_total * a.inner_factor);
    const Eigen::VectorXd zeta0 = nlp.scale_point(build_guess(nlp, spec, t_guess));
    const NlpResult res = solve_nlp(nlp, zeta0, s);
    OptimalTrajectory traj = extract(nlp, res);
    if (traj.converged) return traj;
    if (!have_best || traj.max_defect < best.max_defect) {
      best = traj;
      have_best = true;
    }
  }
  return best;
}

void save_trajectory(const std::filesystem::path& path, const OptimalTrajectory& traj) {
  const int rows = static_cast<int>(traj.states.rows());
  Eigen::MatrixXd data(rows, 21);
  const double dt = traj.dt();
  for (int k = 0; k < rows; ++k) {
    data(k, 0) = dt * k;
    data.block<1, 16>(k, 1) = traj.states.row(k);
    data.block<1, 4>(k, 17) = traj.controls.row(k);
  }
  write_csv(path, kTrajectoryColumns, data);
}

OptimalTrajectory load_trajectory(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.columns != kTrajectoryColumns) {
    throw CorruptFileError("trajectory: unexpected columns in '" + path.string() + "'");
  }
  const int rows = static_cast<int>(table.data.rows());
  if (rows < 2) throw CorruptFileError("trajectory: too few rows in '" + path.string() + "'");
  OptimalTrajectory traj;
  traj.states = table.data.block(0, 1, rows, 16);
  traj.controls = table.data.block(0, 17, rows, 4);
  traj.duration = table.data(rows - 1, 0);
  traj.converged = true;  // stored artifacts are assumed converged outputs
  traj.status = "loaded";
  // Recompute the Simpson energy from the node controls.
  const double h = traj.duration / (rows - 1);
  double e = 0.0;
  for (int k = 0; k + 1 < rows; ++k) {
    const Eigen::Vector4d uk = traj.controls.row(k);
    const Eigen::Vector4d uk1 = traj.controls.row(k + 1);
    e += (h / 6.0) *
         (uk.squaredNorm() + uk1.squaredNorm() + 4.0 * (0.5 * (uk + uk1)).squaredNorm());
  }
  traj.energy = e;
  return traj;
}

}  // namespace quadlab
