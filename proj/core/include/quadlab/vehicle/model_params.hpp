#pragma once

#include <filesystem>

namespace quadlab {

/// Physical parameters of the quadrotor model. Rotor speeds are in rpm
/// throughout; every aerodynamic coefficient below is calibrated for rpm.
/// The force coefficients produce specific force (m/s^2), the moment
/// coefficients produce torques (N*m).
struct ModelParams {
  // Thrust/drag force coefficients.
  double kx = 1.08e-05;
  double ky = 9.65e-06;
  double kw = 4.36e-08;
  double kz = 2.79e-05;
  double kh = 6.26e-02;

  // Body inertia diagonal [kg*m^2].
  double Ix = 0.000906;
  double Iy = 0.001242;
  double Iz = 0.002054;

  // Moment coefficients.
  double kp = 1.41e-09;
  double kpv = -7.97e-03;
  double kq = 1.22e-09;
  double kqv = 1.29e-02;
  double kr1 = 2.57e-06;
  double kr2 = 4.11e-07;
  double krr = 8.13e-04;

  // First-order rotor lag time constant [s].
  double tau = 0.06;

  // Actuator envelope [rpm]. Commands u in [0,1] map affinely onto it.
  double omega_min = 3000.0;
  double omega_max = 12000.0;

  /// Throws ConfigError if any value is non-finite or violates
  /// Ix,Iy,Iz > 0, tau > 0, 0 <= omega_min < omega_max.
  void validate() const;
};

/// Reads a `key = value` file ('#' starts a comment). Values not present
/// keep their defaults; unknown keys throw ConfigError.
ModelParams load_params(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const ModelParams& params);

}  // namespace quadlab
