#include "quadlab/vehicle/dynamics.hpp"
#include "quadlab/vehicle/integrate.hpp"

#include <benchmark/benchmark.h>

namespace {

quadlab::VehicleState bench_state() {
  quadlab::VehicleState s;
  s.v << 1.2, -0.4, 0.3;
  s.euler << 0.2, -0.1, 0.8;
  s.rates << 0.4, -0.3, 0.2;
  s.rotor.setConstant(7400.0);
  return s;
}

void BM_state_derivative(benchmark::State& state) {
  const quadlab::ModelParams mp;
  const quadlab::VehicleState s = bench_state();
  const Eigen::Vector4d u = Eigen::Vector4d::Constant(0.5);
  const Eigen::Vector3d m_ext = Eigen::Vector3d::Zero();
  for (auto _ : state) {
    benchmark::DoNotOptimize(quadlab::state_derivative(s, u, m_ext, mp));
  }
}
BENCHMARK(BM_state_derivative);

void BM_rk4_step(benchmark::State& state) {
  const quadlab::ModelParams mp;
  quadlab::VehicleState s = bench_state();
  const Eigen::Vector4d u = Eigen::Vector4d::Constant(0.5);
  const Eigen::Vector3d m_ext = Eigen::Vector3d::Zero();
  for (auto _ : state) {
    s = quadlab::rk4_step(s, u, m_ext, mp, 1e-3);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_rk4_step);

void BM_dynamics_jacobians(benchmark::State& state) {
  const quadlab::ModelParams mp;
  const quadlab::VehicleState s = bench_state();
  const Eigen::Vector4d u = Eigen::Vector4d::Constant(0.5);
  Eigen::Matrix<double, 16, 16> A;
  Eigen::Matrix<double, 16, 4> B;
  for (auto _ : state) {
    quadlab::dynamics_jacobians(s, u, mp, A, B);
    benchmark::DoNotOptimize(A);
    benchmark::DoNotOptimize(B);
  }
}
BENCHMARK(BM_dynamics_jacobians);

}  // namespace
