#include "quadlab/dfbc/tracker.hpp"

#include "quadlab/common.hpp"

#include <cmath>

namespace quadlab {

namespace {

double normal_draw(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// ZYX Euler angles that realize a desired body-z axis and heading.
Eigen::Vector3d euler_from_flat(const Eigen::Vector3d& z_b, double yaw) {
  const Eigen::Vector3d x_c(std::cos(yaw), std::sin(yaw), 0.0);
  Eigen::Vector3d y_b = z_b.cross(x_c);
  const double ny = y_b.norm();
  if (ny < 1e-9) return Eigen::Vector3d(0.0, 0.0, yaw);  // thrust along heading; degenerate
  y_b /= ny;
  const Eigen::Vector3d x_b = y_b.cross(z_b);
  const double pitch = -std::asin(std::min(1.0, std::max(-1.0, x_b.z())));
  const double roll = std::atan2(y_b.z(), z_b.z());
  const double psi = std::atan2(x_b.y(), x_b.x());
  return Eigen::Vector3d(roll, pitch, psi);
}

}  // namespace

FlightLog run_dfbc(const PolyTrajectory& traj, const SimConfig& cfg, const DfbcGains& gains) {
  cfg.validate();

  const ModelParams& mp = cfg.params;
  const long n_steps = std::lround(cfg.duration / cfg.dt);
  const long sens_every = std::lround(1.0 / (cfg.dt * cfg.sensor_hz));
  const long ctrl_every = std::lround(1.0 / (cfg.dt * cfg.control_hz));
  const Eigen::Vector3d m_inject = cfg.effective_moment();
  const Eigen::Vector3d g_vec(0.0, 0.0, kGravity);
  const Eigen::Vector3d inertia(mp.Ix, mp.Iy, mp.Iz);
  const double ctrl_hz = cfg.control_hz;

  const Eigen::Vector4d ref0 = traj.sample(0.0);
  VehicleState s;
  s.p = ref0.head<3>();
  s.v = traj.sample(0.0, 1).head<3>();
  s.euler = Eigen::Vector3d(0.0, 0.0, wrap_angle(ref0(3)));
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

  // Reference-clock lap boundaries.
  std::vector<double> lap_marks;
  if (gains.segments_per_lap > 0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      acc += traj.times[k];
      if ((k + 1) % static_cast<std::size_t>(gains.segments_per_lap) == 0)
        lap_marks.push_back(acc);
    }
  }
  std::size_t next_lap = 0;

  Eigen::Vector3d m_hat = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel_meas = Eigen::Vector3d(0.0, 0.0, -kGravity);
  Eigen::Vector3d gyro_meas = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro_prev = Eigen::Vector3d::Zero();
  bool have_prev_gyro = false;
  Eigen::Vector4d u = Eigen::Vector4d::Constant(hover_command(mp));
  double energy = 0.0;
  double prev_u2 = 0.0;
  double prev_tick = 0.0;
  long ci = 0;
  long sj = 0;

  for (long k = 0; k < n_steps; ++k) {
    const double tk = static_cast<double>(k) * cfg.dt;

    if (k % sens_every == 0) {
      const Eigen::Vector3d vb = body_velocity(s);
      Eigen::Vector3d gyro = s.rates;
      if (cfg.gyro_noise > 0.0)
        for (int i = 0; i < 3; ++i) gyro(i) += cfg.gyro_noise * normal_draw(rng);
      accel_meas = body_force(s.rotor, vb, mp);
      gyro_meas = gyro;
      m_hat = est.step(gyro, s.rotor, vb);
      log.sensor_t.push_back(tk);
      log.gyro.col(sj) = gyro;
      log.accel.col(sj) = accel_meas;
      log.rotor.col(sj) = s.rotor;
      log.vbody.col(sj) = vb;
      ++sj;
    }

    if (k % ctrl_every == 0) {
      const Eigen::Vector4d r0 = traj.sample(tk);
      const Eigen::Vector4d r1 = traj.sample(tk, 1);
      const Eigen::Vector4d r2 = traj.sample(tk, 2);

      // Position PD with velocity/acceleration feedforward.
      const Eigen::Vector3d a_des = r2.head<3>() + gains.kp_pos * (r0.head<3>() - s.p) +
                                    gains.kd_pos * (r1.head<3>() - s.v);
      const Eigen::Vector3d f_des = a_des - g_vec;  // desired specific force
      const double thrust_des = std::max(f_des.norm(), 1e-3);
      const Eigen::Vector3d z_b = -f_des / thrust_des;
      const Eigen::Vector3d euler_des = euler_from_flat(z_b, r0(3));

      Eigen::Vector3d euler_err;
      for (int i = 0; i < 3; ++i) euler_err(i) = wrap_angle(euler_des(i) - s.euler(i));
      const Eigen::Vector3d att_gain(gains.k_att, gains.k_att, gains.k_att_yaw);
      const Eigen::Vector3d euler_rate_des =
          att_gain.cwiseProduct(euler_err) + Eigen::Vector3d(0.0, 0.0, r1(3));

      Eigen::Vector3d omega_des;
      Eigen::Vector3d omega_dot_meas = Eigen::Vector3d::Zero();
      try {
        omega_des = euler_rate_matrix(s.euler).inverse() * euler_rate_des;
      } catch (const GimbalLockError&) {
        log.diverged = true;
        log.reason = "gimbal lock";
        log.duration = tk;
        break;
      }
      if (have_prev_gyro) omega_dot_meas = (gyro_meas - gyro_prev) * ctrl_hz;
      gyro_prev = gyro_meas;
      have_prev_gyro = true;

      // Incremental rate loop: moment increment over the measured moment,
      // allocated through the control effectiveness at the current speeds.
      const Eigen::Vector3d omega_dot_des = gains.k_rate * (omega_des - gyro_meas);
      const Eigen::Vector3d dm = inertia.cwiseProduct(omega_dot_des - omega_dot_meas);
      const double dthrust = thrust_des - (-accel_meas.z());

      Eigen::Matrix4d eff;
      const Eigen::Vector4d& w = s.rotor;
      // Yaw torque per unit speed increment includes the reaction torque of the
      // spin-up itself, averaged over one control period through the rotor lag;
      // with kr1 alone the loop underestimates its authority ~3.5x and chatters.
      const double spin_rate = ctrl_hz * (1.0 - std::exp(-1.0 / (ctrl_hz * mp.tau)));
      eff.row(0) = 2.0 * mp.kw * w.transpose();
      eff.row(1) = 2.0 * mp.kp * Eigen::Vector4d(w(0), -w(1), -w(2), w(3)).transpose();
      eff.row(2) = 2.0 * mp.kq * Eigen::Vector4d(w(0), w(1), -w(2), -w(3)).transpose();
      eff.row(3) =
          (mp.kr1 + mp.kr2 * spin_rate) * Eigen::Vector4d(-1.0, 1.0, -1.0, 1.0).transpose();
      const Eigen::Vector4d dw =
          eff.partialPivLu().solve(Eigen::Vector4d(dthrust, dm.x(), dm.y(), dm.z()));

      const Eigen::Vector4d w_cmd = s.rotor + dw;
      for (int i = 0; i < 4; ++i) {
        u(i) = (w_cmd(i) - mp.omega_min) / (mp.omega_max - mp.omega_min);
        if (u(i) <= 0.0) {
          u(i) = 0.0;
          ++log.saturated_ticks[static_cast<std::size_t>(i)];
        } else if (u(i) >= 1.0) {
          u(i) = 1.0;
          ++log.saturated_ticks[static_cast<std::size_t>(i)];
        }
      }

      const double u2 = u.squaredNorm();
      if (ci > 0) energy += 0.5 * (prev_u2 + u2) * (tk - prev_tick);
      prev_u2 = u2;
      prev_tick = tk;

      while (next_lap < lap_marks.size() && tk + 0.5 * cfg.dt >= lap_marks[next_lap]) {
        log.lap_times.push_back(tk);
        ++next_lap;
      }

      log.t.push_back(tk);
      log.states.col(ci) = s.pack();
      log.controls.col(ci) = u;
      log.m_est.col(ci) = m_hat;
      log.waypoint.push_back(traj.segment_at(tk));
      log.energy.push_back(energy);
      log.final_waypoint_distance = (s.p - r0.head<3>()).norm();
      ++ci;

      if ((s.p - r0.head<3>()).norm() > 3.0) {
        log.diverged = true;
        log.reason = "tracking error exceeded 3 m";
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

}  // namespace quadlab
