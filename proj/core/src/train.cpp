#include "quadlab/gcnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace quadlab {

namespace {

struct AdamState {
  std::array<Eigen::MatrixXd, 4> mw, vw;
  std::array<Eigen::VectorXd, 4> mb, vb;
  long steps = 0;

  explicit AdamState(const GcnPolicy& p) {
    for (int l = 0; l < 4; ++l) {
      mw[l] = Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols());
      vw[l] = mw[l];
      mb[l] = Eigen::VectorXd::Zero(p.b[l].size());
      vb[l] = mb[l];
    }
  }

  void apply(GcnPolicy& p, const GcnGradient& g, double lr) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    ++steps;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps));
    for (int l = 0; l < 4; ++l) {
      mw[l] = kBeta1 * mw[l] + (1.0 - kBeta1) * g.w[l];
      vw[l] = kBeta2 * vw[l] + (1.0 - kBeta2) * g.w[l].cwiseAbs2();
      p.w[l] -= lr * (mw[l] / c1).cwiseQuotient(((vw[l] / c2).cwiseSqrt().array() + kEps).matrix());
      mb[l] = kBeta1 * mb[l] + (1.0 - kBeta1) * g.b[l];
      vb[l] = kBeta2 * vb[l] + (1.0 - kBeta2) * g.b[l].cwiseAbs2();
      p.b[l] -= lr * (mb[l] / c1).cwiseQuotient(((vb[l] / c2).cwiseSqrt().array() + kEps).matrix());
    }
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("train: batch size must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (max_epochs < 1) throw ConfigError("train: need at least one epoch");
  if (!(target_mse > 0.0)) throw ConfigError("train: target MSE must be positive");
  if (plateau_patience < 1) throw ConfigError("train: plateau patience must be at least 1");
  if (!(lr_decay > 0.0) || !(lr_decay < 1.0)) throw ConfigError("train: decay must be in (0,1)");
}

TrainResult train_policy(const Dataset& train_set, const Dataset& test_set,
                         const TrainConfig& config) {
  config.validate();
  if (train_set.dim() != test_set.dim() || train_set.kind != test_set.kind) {
    throw DimensionMismatchError("train: train/test splits disagree on kind or width");
  }
  if (train_set.size() < 1 || test_set.size() < 1) {
    throw DimensionMismatchError("train: empty split");
  }

  SplitMix64 rng(config.seed);
  GcnPolicy policy = GcnPolicy::init(train_set.kind, train_set.norm, train_set.dim(), rng);
  AdamState adam(policy);
  GcnGradient grad;

  const Eigen::Index n = train_set.size();
  const Eigen::Index batch = std::min<Eigen::Index>(config.batch, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd bx(train_set.dim(), batch);
  Eigen::MatrixXd bu(4, batch);

  TrainResult result;
  result.policy = policy;
  result.best_test_mse = std::numeric_limits<double>::infinity();
  double lr = config.lr;
  int stale = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // Fisher-Yates with the run's own stream keeps epochs reproducible.
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    for (Eigen::Index at = 0; at + batch <= n; at += batch) {
      for (Eigen::Index k = 0; k < batch; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(at + k)];
        bx.col(k) = train_set.inputs.col(src);
        bu.col(k) = train_set.targets.col(src);
      }
      const double loss = policy_loss_gradient(policy, bx, bu, grad);
      if (!std::isfinite(loss)) throw DivergedError("train: mini-batch loss left the reals");
      adam.apply(policy, grad, lr);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.train_mse = policy_mse(policy, train_set.inputs, train_set.targets);
    stats.test_mse = policy_mse(policy, test_set.inputs, test_set.targets);
    if (!std::isfinite(stats.train_mse) || !std::isfinite(stats.test_mse)) {
      throw DivergedError("train: epoch MSE left the reals");
    }
    result.log.push_back(stats);
    result.epochs_run = epoch;
    if (config.verbose) {
      std::printf("epoch %3d  train %.3e  test %.3e  lr %.1e\n", epoch, stats.train_mse,
                  stats.test_mse, lr);
    }

    if (stats.test_mse < result.best_test_mse * (1.0 - 1e-4)) {
      stale = 0;
    } else if (++stale >= config.plateau_patience) {
      lr = std::max(config.lr_floor, lr * config.lr_decay);
      stale = 0;
    }
    if (stats.test_mse < result.best_test_mse) {
      result.best_test_mse = stats.test_mse;
      result.policy = policy;
    }
    if (stats.test_mse <= config.target_mse) {
      result.reached_target = true;
      break;
    }
  }
  return result;
}

}  // namespace quadlab
