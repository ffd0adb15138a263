#include "quadlab/gcnet/train.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace quadlab;

namespace {

// Deterministic synthetic imitation set: targets are a smooth map of the
// inputs squashed into (0,1).
Dataset synthetic_set(int dim, Eigen::Index n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset d;
  d.kind = dim == 16 ? RecipeKind::Nominal : RecipeKind::Adaptive;
  d.inputs.resize(dim, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) d.inputs(r, c) = rng.uniform(-1.0, 1.0);
  }
  Eigen::MatrixXd mix(4, dim);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < dim; ++c) mix(r, c) = rng.uniform(-1.0, 1.0);
  }
  d.targets.resize(4, n);
  const Eigen::MatrixXd z = mix * d.inputs;
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int r = 0; r < 4; ++r) {
      d.targets(r, c) = 0.5 + 0.4 * std::tanh(z(r, c) + 0.3 * std::sin(3.0 * z((r + 1) % 4, c)));
    }
  }
  return d;
}

double logit(double y) { return std::log(y / (1.0 - y)); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("forward is the documented relu chain with a sigmoid head") {
  SplitMix64 rng(11);
  GcnPolicy p = GcnPolicy::init(RecipeKind::Nominal, {}, 16, rng);
  REQUIRE(p.input_dim() == 16);
  REQUIRE(p.w[0].rows() == 120);
  REQUIRE(p.w[1].rows() == 120);
  REQUIRE(p.w[2].cols() == 120);
  REQUIRE(p.w[3].rows() == 4);
  REQUIRE(p.w[3].cols() == 120);

  // All-zero parameters: sigmoid(0) on every head.
  GcnPolicy zero = p;
  for (auto& w : zero.w) w.setZero();
  const Eigen::Vector4d mid = zero.forward(Eigen::VectorXd::Ones(16));
  CHECK((mid.array() == 0.5).all());

  CHECK_THROWS_AS((void)p.forward(Eigen::VectorXd::Zero(15)), DimensionMismatchError);
  CHECK_THROWS_AS((void)p.forward_batch(Eigen::MatrixXd::Zero(17, 3)), DimensionMismatchError);

  // Positive homogeneity of the hidden chain: with identity upper layers,
  // doubling the first-layer weights doubles the output logits exactly.
  GcnPolicy chain = p;
  chain.w[1] = chain.w[2] = Eigen::MatrixXd::Identity(120, 120);
  chain.b[1].setZero();
  chain.b[2].setZero();
  chain.w[3] = 0.05 * Eigen::MatrixXd::Identity(4, 120);
  chain.b[3].setZero();
  GcnPolicy doubled = chain;
  doubled.w[0] *= 2.0;
  Eigen::VectorXd x(16);
  for (int i = 0; i < 16; ++i) x(i) = std::sin(0.7 * i + 0.2);
  const Eigen::Vector4d y1 = chain.forward(x);
  const Eigen::Vector4d y2 = doubled.forward(x);
  for (int i = 0; i < 4; ++i) {
    CHECK(logit(y2(i)) == doctest::Approx(2.0 * logit(y1(i))).epsilon(1e-12));
  }

  // Range property over a large random batch.
  Eigen::MatrixXd inputs(16, 100000);
  SplitMix64 rng2(12);
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    for (int r = 0; r < 16; ++r) inputs(r, c) = rng2.uniform(-3.0, 3.0);
  }
  const auto out = p.forward_batch(inputs);
  CHECK((out.array() > 0.0).all());
  CHECK((out.array() < 1.0).all());
  // Batch and single-input paths agree bit-for-bit.
  CHECK(p.forward(inputs.col(17)) == out.col(17));
}

TEST_CASE("backprop gradients match central finite differences") {
  SplitMix64 rng(21);
  GcnPolicy p = GcnPolicy::init(RecipeKind::Nominal, {}, 7, rng);
  // Mildly trained-looking biases so relu kinks sit away from zero.
  for (auto& b : p.b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.05, 0.05);
  }
  Eigen::MatrixXd x(7, 10), u(4, 10);
  for (Eigen::Index c = 0; c < 10; ++c) {
    for (int r = 0; r < 7; ++r) x(r, c) = rng.uniform(-1.0, 1.0);
    for (int r = 0; r < 4; ++r) u(r, c) = rng.uniform(0.1, 0.9);
  }

  GcnGradient g;
  const double loss = policy_loss_gradient(p, x, u, g);
  CHECK(loss == doctest::Approx(policy_mse(p, x, u)).epsilon(1e-14));

  const double h = 1e-5;
  double worst = 0.0;
  auto check_block = [&](double* param, const double* analytic, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) {
      const double keep = param[i];
      param[i] = keep + h;
      const double up = policy_mse(p, x, u);
      param[i] = keep - h;
      const double dn = policy_mse(p, x, u);
      param[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double rel =
          std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  };
  for (int l = 0; l < 4; ++l) {
    check_block(p.w[l].data(), g.w[l].data(), p.w[l].size());
    check_block(p.b[l].data(), g.b[l].data(), p.b[l].size());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("an overparameterized run drives 256 pairs below 1e-5") {
  const Dataset d = synthetic_set(16, 256, 5);
  TrainConfig cfg;
  cfg.batch = 64;
  cfg.lr = 1e-3;
  cfg.max_epochs = 2000;
  cfg.target_mse = 1e-5;
  cfg.seed = 9;
  const TrainResult r = train_policy(d, d, cfg);
  CHECK(r.reached_target);
  CHECK(r.best_test_mse < 1e-5);
  CHECK(policy_mse(r.policy, d.inputs, d.targets) < 1e-5);
}

TEST_CASE("full-batch training with a small step decreases monotonically") {
  const Dataset d = synthetic_set(16, 64, 6);
  TrainConfig cfg;
  cfg.batch = 64;  // one step per epoch
  cfg.lr = 1e-4;
  cfg.max_epochs = 40;
  cfg.target_mse = 1e-12;
  cfg.seed = 3;
  const TrainResult r = train_policy(d, d, cfg);
  REQUIRE(r.log.size() == 40);
  for (std::size_t e = 1; e < r.log.size(); ++e) {
    CHECK(r.log[e].train_mse <= r.log[e - 1].train_mse * (1.0 + 1e-9));
  }
}

TEST_CASE("training is deterministic and rejects inconsistent splits") {
  const Dataset d = synthetic_set(19, 96, 8);
  TrainConfig cfg;
  cfg.batch = 32;
  cfg.max_epochs = 4;
  cfg.target_mse = 1e-12;
  const TrainResult a = train_policy(d, d, cfg);
  const TrainResult b = train_policy(d, d, cfg);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.policy.w[l] == b.policy.w[l]);
    CHECK(a.policy.b[l] == b.policy.b[l]);
  }
  REQUIRE(a.log.size() == b.log.size());
  CHECK(a.log.back().test_mse == b.log.back().test_mse);

  const Dataset other = synthetic_set(16, 32, 9);
  CHECK_THROWS_AS((void)train_policy(d, other, cfg), DimensionMismatchError);

  Dataset poisoned = d;
  poisoned.inputs(0, 0) = std::numeric_limits<double>::quiet_NaN();
  cfg.batch = 96;
  CHECK_THROWS_AS((void)train_policy(poisoned, d, cfg), DivergedError);
}

TEST_CASE("policy files round-trip bit-exactly and reject damage") {
  const auto dir = std::filesystem::temp_directory_path() / "quadlab_gcnet_test";
  std::filesystem::create_directories(dir);
  SplitMix64 rng(33);
  NormalizationSpec norm;
  norm.omega_min = 5000.0;
  norm.omega_max = 10000.0;
  GcnPolicy p = GcnPolicy::init(RecipeKind::Adaptive, norm, 19, rng);
  for (auto& b : p.b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.2, 0.2);
  }

  const auto file = dir / "p.qlnet";
  save_policy(file, p);
  const GcnPolicy r = load_policy(file);
  CHECK(r.kind == RecipeKind::Adaptive);
  CHECK(r.norm.omega_min == 5000.0);
  CHECK(r.norm.moment == p.norm.moment);
  for (int l = 0; l < 4; ++l) {
    CHECK(r.w[l] == p.w[l]);
    CHECK(r.b[l] == p.b[l]);
  }
  Eigen::VectorXd x(19);
  for (int i = 0; i < 19; ++i) x(i) = std::cos(1.3 * i);
  CHECK(r.forward(x) == p.forward(x));

  // A 16-input pipeline must refuse this 19-input policy.
  CHECK_THROWS_AS((void)r.forward(Eigen::VectorXd::Zero(16)), DimensionMismatchError);

  CHECK_THROWS_AS((void)load_policy(dir / "absent.qlnet"), CorruptFileError);
  const std::string bytes = slurp(file);
  {
    std::ofstream out(dir / "magic.qlnet", std::ios::binary);
    out << "XXNET" << bytes.substr(5);
  }
  CHECK_THROWS_AS((void)load_policy(dir / "magic.qlnet"), CorruptFileError);
  {
    std::ofstream out(dir / "future.qlnet", std::ios::binary);
    out << "QLNET 7" << bytes.substr(7);
  }
  CHECK_THROWS_AS((void)load_policy(dir / "future.qlnet"), VersionMismatchError);
  {
    std::ofstream out(dir / "short.qlnet", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS((void)load_policy(dir / "short.qlnet"), CorruptFileError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a single forward pass runs well under a millisecond") {
  SplitMix64 rng(44);
  const GcnPolicy p = GcnPolicy::init(RecipeKind::Waypoint, {}, 19, rng);
  Eigen::VectorXd x(19);
  for (int i = 0; i < 19; ++i) x(i) = rng.uniform(-1.0, 1.0);

  volatile double sink = 0.0;
  const int calls = 2000;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < calls; ++i) sink += p.forward(x)(0);
  const double per_call =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / calls;
  CHECK(per_call < 1e-3);
  CHECK(sink > 0.0);
}
