#pragma once

#include <Eigen/Dense>

namespace quadlab {

using Vec16 = Eigen::Matrix<double, 16, 1>;

/// Rigid-body state in NED world coordinates (+z down).
/// Packed layout: [p(3), v(3), euler(3), rates(3), rotor(4)].
struct VehicleState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();      // position [m]
  Eigen::Vector3d v = Eigen::Vector3d::Zero();      // velocity [m/s]
  Eigen::Vector3d euler = Eigen::Vector3d::Zero();  // roll, pitch, yaw [rad], ZYX
  Eigen::Vector3d rates = Eigen::Vector3d::Zero();  // body rates p, q, r [rad/s]
  Eigen::Vector4d rotor = Eigen::Vector4d::Zero();  // rotor speeds [rpm]

  static constexpr int kDim = 16;

  Vec16 pack() const {
    Vec16 x;
    x << p, v, euler, rates, rotor;
    return x;
  }

  static VehicleState unpack(const Eigen::Ref<const Vec16>& x) {
    VehicleState s;
    s.p = x.segment<3>(0);
    s.v = x.segment<3>(3);
    s.euler = x.segment<3>(6);
    s.rates = x.segment<3>(9);
    s.rotor = x.segment<4>(12);
    return s;
  }
};

}  // namespace quadlab
