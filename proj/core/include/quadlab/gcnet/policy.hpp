#pragma once

#include "quadlab/common.hpp"
#include "quadlab/data/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>

namespace quadlab {

/// State-feedback control network: three 120-wide ReLU layers and a sigmoid
/// output head, mapping a normalized state vector to rpm commands in (0,1)^4.
/// Carries the input normalization of the dataset it was trained on, so a
/// policy file is self-contained for flight.
struct GcnPolicy {
  static constexpr int kHidden = 120;
  static constexpr int kOutputs = 4;

  RecipeKind kind = RecipeKind::Nominal;
  NormalizationSpec norm;
  std::array<Eigen::MatrixXd, 4> w;  // w[l] maps layer l inputs to outputs
  std::array<Eigen::VectorXd, 4> b;

  int input_dim() const { return static_cast<int>(w[0].cols()); }

  /// Uniform fan-in initialization, biases zero.
  static GcnPolicy init(RecipeKind kind, const NormalizationSpec& norm, int d_in,
                        SplitMix64& rng);

  /// Throws DimensionMismatchError unless input.size() == input_dim().
  Eigen::Vector4d forward(const Eigen::Ref<const Eigen::VectorXd>& input) const;

  /// Column-wise forward pass over a batch.
  Eigen::Matrix<double, 4, Eigen::Dynamic> forward_batch(
      const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;
};

/// Mean squared error over all 4*n output entries.
double policy_mse(const GcnPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                  const Eigen::Ref<const Eigen::MatrixXd>& targets);

/// Parameter-shaped gradient accumulator.
struct GcnGradient {
  std::array<Eigen::MatrixXd, 4> w;
  std::array<Eigen::VectorXd, 4> b;
};

/// Loss (identical to policy_mse on the same batch) and its exact gradient
/// by reverse accumulation.
double policy_loss_gradient(const GcnPolicy& policy,
                            const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                            const Eigen::Ref<const Eigen::MatrixXd>& targets, GcnGradient& grad);

/// Versioned binary container; weights stored row-major. Round trips are
/// bit-exact.
void save_policy(const std::filesystem::path& path, const GcnPolicy& policy);

/// Throws VersionMismatchError for a foreign version, CorruptFileError for
/// damaged content.
GcnPolicy load_policy(const std::filesystem::path& path);

}  // namespace quadlab
