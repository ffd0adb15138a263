#include "quadlab/sim/simulator.hpp"

#include "quadlab/common.hpp"
#include "quadlab/csv.hpp"
#include "quadlab/data/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

namespace quadlab {

void SimConfig::validate() const {
  if (dt <= 0.0) throw ConfigError("sim: physics dt must be positive");
  if (control_hz <= 0.0 || sensor_hz <= 0.0) throw ConfigError("sim: loop rates must be positive");
  if (control_hz > sensor_hz) throw ConfigError("sim: control rate must not exceed sensor rate");
  if (sensor_hz > 1.0 / dt + 1e-9) throw ConfigError("sim: sensor rate must not exceed 1/dt");
  const double sens_div = 1.0 / (dt * sensor_hz);
  const double ctrl_div = 1.0 / (dt * control_hz);
  if (std::abs(sens_div - std::round(sens_div)) > 1e-9 ||
      std::abs(ctrl_div - std::round(ctrl_div)) > 1e-9)
    throw ConfigError("sim: loop rates must divide the physics rate");
  if (gyro_noise < 0.0) throw ConfigError("sim: gyro noise must be non-negative");
  if (duration <= 0.0) throw ConfigError("sim: duration must be positive");
}

Eigen::Vector3d SimConfig::effective_moment() const {
  Eigen::Vector3d m = m_ext;
  if (added_weight) m.x() += -0.06;
  return m;
}

namespace {

double normal_draw(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0,1], keeps the log finite
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace

FlightLog run_gcnet(const GcnPolicy& policy, const WaypointPlan& plan, const SimConfig& cfg,
                    bool adaptive) {
  cfg.validate();
  plan.validate();
  const bool wants_moment = policy.kind != RecipeKind::Nominal;
  if (adaptive != wants_moment)
    throw DimensionMismatchError("sim: adaptive flag disagrees with the policy input layout");

  // The flight envelope is part of what the network learned; honor it.
  ModelParams mp = cfg.params;
  mp.omega_min = policy.norm.omega_min;
  mp.omega_max = policy.norm.omega_max;

  const long n_steps = std::lround(cfg.duration / cfg.dt);
  const long sens_every = std::lround(1.0 / (cfg.dt * cfg.sensor_hz));
  const long ctrl_every = std::lround(1.0 / (cfg.dt * cfg.control_hz));
  const Eigen::Vector3d m_inject = cfg.effective_moment();
  const int n_points = static_cast<int>(plan.points.size());

  VehicleState s;
  s.p = plan.start_position;
  s.v.setZero();
  s.euler = Eigen::Vector3d(0.0, 0.0, plan.start_yaw);
  s.rates.setZero();
  s.rotor.setConstant(hover_rpm(mp));

  MomentEstimator est(mp, cfg.sensor_hz);
  SplitMix64 rng(cfg.seed);

  FlightLog log;
  const long max_ctrl = n_steps / ctrl_every + 1;
  const long max_sens = n_steps / sens_every + 1;
  log.states.resize(16, max_ctrl);
  log.controls.resize(4, max_ctrl);
  log.m_est.resize(3, max_ctrl);
  log.gyro.resize(3, max_sens);
  log.accel.resize(3, max_sens);
  log.rotor.resize(4, max_sens);
  log.vbody.resize(3, max_sens);

  Eigen::Vector3d m_hat = Eigen::Vector3d::Zero();
  Eigen::Vector4d u = Eigen::Vector4d::Constant(hover_command(mp));
  int active = 0;
  long switches = 0;
  double next_switch = plan.period;
  double energy = 0.0;
  double prev_u2 = 0.0;
  double prev_tick = 0.0;
  long ci = 0;
  long sj = 0;
  bool laps_done = false;

  for (long k = 0; k < n_steps; ++k) {
    const double tk = static_cast<double>(k) * cfg.dt;

    if (k % sens_every == 0) {
      const Eigen::Vector3d vb = body_velocity(s);
      Eigen::Vector3d gyro = s.rates;
      if (cfg.gyro_noise > 0.0)
        for (int i = 0; i < 3; ++i) gyro(i) += cfg.gyro_noise * normal_draw(rng);
      const Eigen::Vector3d accel = body_force(s.rotor, vb, mp);
      m_hat = est.step(gyro, s.rotor, vb);
      log.sensor_t.push_back(tk);
      log.gyro.col(sj) = gyro;
      log.accel.col(sj) = accel;
      log.rotor.col(sj) = s.rotor;
      log.vbody.col(sj) = vb;
      ++sj;
    }

    if (k % ctrl_every == 0) {
      // Switching runs before input assembly so the tick flies the new leg.
      bool switched = false;
      if (plan.policy == SwitchPolicy::Timed) {
        if (tk + 0.5 * cfg.dt >= next_switch) {
          next_switch += plan.period;
          switched = true;
        }
      } else {
        switched = (s.p - plan.points[static_cast<std::size_t>(active)]).norm() < plan.radius;
      }
      if (switched) {
        log.switch_times.push_back(tk);
        log.switch_distances.push_back(
            (s.p - plan.points[static_cast<std::size_t>(active)]).norm());
        active = (active + 1) % n_points;
        ++switches;
        if (switches % n_points == 0) {
          log.lap_times.push_back(tk);
          if (plan.laps > 0 && switches / n_points >= plan.laps) laps_done = true;
        }
      }

      const Eigen::Vector3d& wp = plan.points[static_cast<std::size_t>(active)];
      const std::optional<Eigen::Vector3d> m_in =
          wants_moment ? std::optional<Eigen::Vector3d>(m_hat) : std::nullopt;
      Eigen::VectorXd in;
      if (plan.policy == SwitchPolicy::Proximity) {
        const VehicleState view = frame_switch(s, wp, static_cast<int>(switches % 4));
        in = assemble_inputs(view, m_in, std::nullopt, policy.kind, policy.norm);
      } else {
        in = assemble_inputs(s, m_in, wp, policy.kind, policy.norm);
      }
      u = policy.forward(in);
      for (int i = 0; i < 4; ++i)
        if (u(i) <= 0.0 || u(i) >= 1.0) ++log.saturated_ticks[static_cast<std::size_t>(i)];

      const double u2 = u.squaredNorm();
      if (ci > 0) energy += 0.5 * (prev_u2 + u2) * (tk - prev_tick);
      prev_u2 = u2;
      prev_tick = tk;

      log.t.push_back(tk);
      log.states.col(ci) = s.pack();
      log.controls.col(ci) = u;
      log.m_est.col(ci) = m_hat;
      log.waypoint.push_back(active);
      log.energy.push_back(energy);
      log.final_waypoint_distance = (s.p - wp).norm();
      ++ci;

      if (laps_done) {
        log.duration = tk;
        break;
      }
    }

    try {
      s = rk4_step(s, u, m_inject, mp, cfg.dt);
    } catch (const GimbalLockError&) {
      log.diverged = true;
      log.reason = "gimbal lock";
      log.duration = tk;
      break;
    }
    if (s.p.norm() > 50.0) {
      log.diverged = true;
      log.reason = "position norm exceeded 50 m";
      log.duration = tk + cfg.dt;
      break;
    }
    log.duration = tk + cfg.dt;
  }

  log.states.conservativeResize(Eigen::NoChange, ci);
  log.controls.conservativeResize(Eigen::NoChange, ci);
  log.m_est.conservativeResize(Eigen::NoChange, ci);
  log.gyro.conservativeResize(Eigen::NoChange, sj);
  log.accel.conservativeResize(Eigen::NoChange, sj);
  log.rotor.conservativeResize(Eigen::NoChange, sj);
  log.vbody.conservativeResize(Eigen::NoChange, sj);
  log.total_energy = energy;
  return log;
}

ModelComparison compare_measured_modeled(const FlightLog& log, const ModelParams& params) {
  const Eigen::Index m = static_cast<Eigen::Index>(log.sensor_t.size());
  if (m < 6) throw SeriesTooShortError("sim: comparison needs at least 6 sensor frames");
  const double fs =
      static_cast<double>(m - 1) / (log.sensor_t.back() - log.sensor_t.front());
  const ButterworthLp2 lp = design_lowpass(16.0, fs);

  Eigen::MatrixXd gyro_f(3, m);
  Eigen::MatrixXd accel_f(3, m);
  for (int i = 0; i < 3; ++i) {
    gyro_f.row(i) = filter_noncausal(lp, log.gyro.row(i).transpose()).transpose();
    accel_f.row(i) = filter_noncausal(lp, log.accel.row(i).transpose()).transpose();
  }

  // Central differences inside, one-sided at the edges.
  auto derivative = [fs, m](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd d(x.rows(), m);
    d.col(0) = (x.col(1) - x.col(0)) * fs;
    d.col(m - 1) = (x.col(m - 1) - x.col(m - 2)) * fs;
    for (Eigen::Index j = 1; j + 1 < m; ++j) d.col(j) = (x.col(j + 1) - x.col(j - 1)) * (0.5 * fs);
    return d;
  };
  const Eigen::MatrixXd gyro_dot = derivative(gyro_f);
  const Eigen::MatrixXd rotor_dot = derivative(log.rotor);

  ModelComparison cmp;
  cmp.t = log.sensor_t;
  cmp.measured_moment.resize(3, m);
  cmp.modeled_moment.resize(3, m);
  cmp.measured_force = accel_f;
  cmp.modeled_force.resize(3, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    cmp.measured_moment.col(j) = measured_moment(gyro_f.col(j), gyro_dot.col(j), params);
    cmp.modeled_moment.col(j) =
        body_moment(log.rotor.col(j), rotor_dot.col(j), log.vbody.col(j), gyro_f(2, j), params);
    cmp.modeled_force.col(j) = body_force(log.rotor.col(j), log.vbody.col(j), params);
  }
  cmp.residual_moment = cmp.measured_moment - cmp.modeled_moment;
  cmp.residual_force = cmp.measured_force - cmp.modeled_force;
  return cmp;
}

namespace {

void append_json_array(std::ofstream& out, const char* key, const std::vector<double>& v,
                       bool trailing_comma) {
  char buf[32];
  out << "  \"" << key << "\": [";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out << buf;
  }
  out << ']' << (trailing_comma ? ",\n" : "\n");
}

}  // namespace

void save_flight_log(const FlightLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  const Eigen::Index n = static_cast<Eigen::Index>(log.t.size());
  Eigen::MatrixXd main_rows(n, 26);
  for (Eigen::Index i = 0; i < n; ++i) {
    main_rows(i, 0) = log.t[static_cast<std::size_t>(i)];
    main_rows.block<1, 16>(i, 1) = log.states.col(i).transpose();
    main_rows.block<1, 4>(i, 17) = log.controls.col(i).transpose();
    main_rows.block<1, 3>(i, 21) = log.m_est.col(i).transpose();
    main_rows(i, 24) = log.waypoint[static_cast<std::size_t>(i)];
    main_rows(i, 25) = log.energy[static_cast<std::size_t>(i)];
  }
  write_csv(dir / "log.csv",
            {"t",  "px", "py", "pz", "vx", "vy", "vz",     "roll",   "pitch",  "yaw",
             "p",  "q",  "r",  "w1", "w2", "w3", "w4",     "u1",     "u2",     "u3",
             "u4", "mx_est", "my_est", "mz_est", "waypoint", "energy"},
            main_rows);

  const Eigen::Index ns = static_cast<Eigen::Index>(log.sensor_t.size());
  Eigen::MatrixXd sensor_rows(ns, 14);
  for (Eigen::Index j = 0; j < ns; ++j) {
    sensor_rows(j, 0) = log.sensor_t[static_cast<std::size_t>(j)];
    sensor_rows.block<1, 3>(j, 1) = log.gyro.col(j).transpose();
    sensor_rows.block<1, 3>(j, 4) = log.accel.col(j).transpose();
    sensor_rows.block<1, 4>(j, 7) = log.rotor.col(j).transpose();
    sensor_rows.block<1, 3>(j, 11) = log.vbody.col(j).transpose();
  }
  write_csv(dir / "sensors.csv",
            {"t", "gx", "gy", "gz", "ax", "ay", "az", "w1", "w2", "w3", "w4", "vbx", "vby",
             "vbz"},
            sensor_rows);

  char buf[32];
  std::ofstream out(dir / "summary.json", std::ios::trunc);
  out << "{\n";
  std::snprintf(buf, sizeof(buf), "%.17g", log.duration);
  out << "  \"duration\": " << buf << ",\n";
  std::snprintf(buf, sizeof(buf), "%.17g", log.total_energy);
  out << "  \"total_energy\": " << buf << ",\n";
  std::snprintf(buf, sizeof(buf), "%.17g", log.final_waypoint_distance);
  out << "  \"final_waypoint_distance\": " << buf << ",\n";
  out << "  \"laps\": " << log.lap_times.size() << ",\n";
  append_json_array(out, "lap_times", log.lap_times, true);
  append_json_array(out, "switch_times", log.switch_times, true);
  append_json_array(out, "switch_distances", log.switch_distances, true);
  out << "  \"saturated_ticks\": [" << log.saturated_ticks[0] << ", " << log.saturated_ticks[1]
      << ", " << log.saturated_ticks[2] << ", " << log.saturated_ticks[3] << "],\n";
  out << "  \"diverged\": " << (log.diverged ? "true" : "false") << ",\n"
      << "  \"reason\": \"" << log.reason << "\"\n"
      << "}\n";
  if (!out) throw CorruptFileError("sim: cannot write summary under " + dir.string());
}

}  // namespace quadlab
