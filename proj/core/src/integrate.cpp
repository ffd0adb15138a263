#include "quadlab/vehicle/integrate.hpp"

#include "quadlab/common.hpp"

namespace quadlab {

VehicleState rk4_step(const VehicleState& s, const Eigen::Vector4d& u,
                      const Eigen::Vector3d& m_ext, const ModelParams& mp, double dt) {
  if (!(dt > 0.0)) throw InfeasibleBoundsError("rk4_step: dt must be positive");
  if ((u.array() < 0.0).any() || (u.array() > 1.0).any()) {
    throw InfeasibleBoundsError("rk4_step: control outside [0,1]");
  }
  const Vec16 x0 = s.pack();
  const Vec16 k1 = state_derivative(s, u, m_ext, mp);
  const Vec16 k2 = state_derivative(VehicleState::unpack(x0 + 0.5 * dt * k1), u, m_ext, mp);
  const Vec16 k3 = state_derivative(VehicleState::unpack(x0 + 0.5 * dt * k2), u, m_ext, mp);
  const Vec16 k4 = state_derivative(VehicleState::unpack(x0 + dt * k3), u, m_ext, mp);
  Vec16 x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  x1(8) = wrap_angle(x1(8));
  x1.segment<4>(12) = x1.segment<4>(12).cwiseMax(mp.omega_min).cwiseMin(mp.omega_max);
  return VehicleState::unpack(x1);
}

}  // namespace quadlab
