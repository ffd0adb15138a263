#pragma once

#include "quadlab/vehicle/model_params.hpp"
#include "quadlab/vehicle/state.hpp"

#include <Eigen/Dense>

namespace quadlab {

/// Body-to-world rotation for ZYX Euler angles: R = Rz(psi) * Ry(theta) * Rx(phi).
Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& euler);

/// Maps body rates to Euler-angle rates. Throws GimbalLockError when
/// |pitch| is within 1e-3 rad of pi/2.
Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& euler);

/// Velocity expressed in the body frame: R^T * v.
Eigen::Vector3d body_velocity(const VehicleState& s);

/// Aerodynamic specific force in the body frame [m/s^2]. The z component is
/// thrust plus vertical drag; x/y are rotor-speed-proportional drag.
Eigen::Vector3d body_force(const VehicleState& s, const ModelParams& mp);

/// Force model on raw measurements: rotor speeds and body-frame velocity.
Eigen::Vector3d body_force(const Eigen::Vector4d& rotor, const Eigen::Vector3d& v_body,
                           const ModelParams& mp);

/// Rotor speed derivative [rpm/s] under a first-order lag toward the
/// commanded speed (omega_max - omega_min) * u + omega_min.
Eigen::Vector4d rotor_accel(const Eigen::Vector4d& rotor, const Eigen::Vector4d& u,
                            const ModelParams& mp);

/// Body torque [N*m] produced by the rotors, including the rotor-inertia
/// reaction term driven by rotor_dot and the yaw damping term.
Eigen::Vector3d body_moment(const VehicleState& s, const Eigen::Vector4d& rotor_dot,
                            const ModelParams& mp);

/// Moment model on raw measurements: rotor speeds/accelerations, body-frame
/// velocity, and yaw rate.
Eigen::Vector3d body_moment(const Eigen::Vector4d& rotor, const Eigen::Vector4d& rotor_dot,
                            const Eigen::Vector3d& v_body, double yaw_rate,
                            const ModelParams& mp);

/// Full 16-dim state derivative. m_ext is an external body torque [N*m]
/// added to the rotor moment.
Vec16 state_derivative(const VehicleState& s, const Eigen::Vector4d& u,
                       const Eigen::Vector3d& m_ext, const ModelParams& mp);

/// Total body moment inferred from gyro data: I * rates_dot + rates x (I * rates).
Eigen::Vector3d measured_moment(const Eigen::Vector3d& rates, const Eigen::Vector3d& rates_dot,
                                const ModelParams& mp);

/// Rotor speed that balances gravity at rest: sqrt(g / (4 * kw)).
double hover_rpm(const ModelParams& mp);

/// Command u that holds hover_rpm in steady state.
double hover_command(const ModelParams& mp);

/// Analytic Jacobians of state_derivative with respect to state and control.
/// m_ext enters additively, so neither block depends on it.
void dynamics_jacobians(const VehicleState& s, const Eigen::Vector4d& u, const ModelParams& mp,
                        Eigen::Matrix<double, 16, 16>& A, Eigen::Matrix<double, 16, 4>& B);

}  // namespace quadlab
