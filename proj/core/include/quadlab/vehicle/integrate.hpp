#pragma once

#include "quadlab/vehicle/dynamics.hpp"

namespace quadlab {

/// Classic fixed-step RK4 over state_derivative with control and external
/// moment held constant. Wraps yaw to (-pi, pi] and clamps rotor speeds to
/// the actuator envelope after the step. Throws InfeasibleBoundsError on
/// dt <= 0 or u outside [0,1]^4.
VehicleState rk4_step(const VehicleState& s, const Eigen::Vector4d& u,
                      const Eigen::Vector3d& m_ext, const ModelParams& mp, double dt);

}  // namespace quadlab
