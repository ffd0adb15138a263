#pragma once

#include "quadlab/gcnet/policy.hpp"

#include <cstdint>
#include <vector>

namespace quadlab {

struct TrainConfig {
  int batch = 256;
  double lr = 1e-3;
  int max_epochs = 300;
  double target_mse = 1e-3;  // early stop once the test MSE reaches this
  int plateau_patience = 10;  // epochs without test improvement before decay
  double lr_decay = 0.5;
  double lr_floor = 1e-6;
  std::uint64_t seed = 1;
  bool verbose = false;

  /// Throws ConfigError on a non-positive batch/lr/epoch budget.
  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  GcnPolicy policy;  // parameters of the best test-MSE epoch
  std::vector<EpochStats> log;
  double best_test_mse = 0.0;
  int epochs_run = 0;
  bool reached_target = false;
};

/// Mini-batch adaptive-moment imitation training with a step-decay schedule
/// on test-MSE plateaus. Deterministic given the config seed. Throws
/// DimensionMismatchError when the two splits disagree and DivergedError
/// when the loss leaves the reals.
TrainResult train_policy(const Dataset& train_set, const Dataset& test_set,
                         const TrainConfig& config);

}  // namespace quadlab
