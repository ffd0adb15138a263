#include "quadlab/gcnet/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace quadlab {

namespace {

constexpr int kLayers = 4;

std::array<int, 5> layer_sizes(int d_in) {
  return {d_in, GcnPolicy::kHidden, GcnPolicy::kHidden, GcnPolicy::kHidden, GcnPolicy::kOutputs};
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

GcnPolicy GcnPolicy::init(RecipeKind kind, const NormalizationSpec& norm, int d_in,
                          SplitMix64& rng) {
  if (d_in < 1) throw DimensionMismatchError("policy: input dimension must be positive");
  GcnPolicy p;
  p.kind = kind;
  p.norm = norm;
  const auto sizes = layer_sizes(d_in);
  for (int l = 0; l < kLayers; ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    p.w[l].resize(rows, cols);
    for (int c = 0; c < cols; ++c) {  // column-major fill order is part of determinism
      for (int r = 0; r < rows; ++r) p.w[l](r, c) = rng.uniform(-bound, bound);
    }
    p.b[l] = Eigen::VectorXd::Zero(rows);
  }
  return p;
}

Eigen::Vector4d GcnPolicy::forward(const Eigen::Ref<const Eigen::VectorXd>& input) const {
  if (input.size() != input_dim()) {
    throw DimensionMismatchError("policy: expected " + std::to_string(input_dim()) +
                                 " inputs, got " + std::to_string(input.size()));
  }
  Eigen::VectorXd a = (w[0] * input + b[0]).cwiseMax(0.0);
  a = (w[1] * a + b[1]).cwiseMax(0.0);
  a = (w[2] * a + b[2]).cwiseMax(0.0);
  Eigen::Vector4d out = w[3] * a + b[3];
  for (int i = 0; i < 4; ++i) out(i) = sigmoid(out(i));
  return out;
}

Eigen::Matrix<double, 4, Eigen::Dynamic> GcnPolicy::forward_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw DimensionMismatchError("policy: batch rows != input dimension");
  }
  Eigen::MatrixXd a = ((w[0] * inputs).colwise() + b[0]).cwiseMax(0.0);
  a = ((w[1] * a).colwise() + b[1]).cwiseMax(0.0);
  a = ((w[2] * a).colwise() + b[2]).cwiseMax(0.0);
  Eigen::Matrix<double, 4, Eigen::Dynamic> out = ((w[3] * a).colwise() + b[3]);
  return out.unaryExpr([](double z) { return sigmoid(z); });
}

double policy_mse(const GcnPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                  const Eigen::Ref<const Eigen::MatrixXd>& targets) {
  if (inputs.cols() != targets.cols() || targets.rows() != 4) {
    throw DimensionMismatchError("policy_mse: inputs/targets shapes disagree");
  }
  const Eigen::Index n = inputs.cols();
  if (n == 0) return 0.0;
  double acc = 0.0;
  const Eigen::Index chunk = 8192;  // bounds the activation working set
  for (Eigen::Index at = 0; at < n; at += chunk) {
    const Eigen::Index m = std::min(chunk, n - at);
    acc += (policy.forward_batch(inputs.middleCols(at, m)) - targets.middleCols(at, m))
               .squaredNorm();
  }
  return acc / static_cast<double>(4 * n);
}

double policy_loss_gradient(const GcnPolicy& policy,
                            const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                            const Eigen::Ref<const Eigen::MatrixXd>& targets, GcnGradient& grad) {
  const Eigen::Index n = inputs.cols();
  if (inputs.rows() != policy.input_dim() || targets.cols() != n || targets.rows() != 4 || n < 1) {
    throw DimensionMismatchError("policy_loss_gradient: bad batch shapes");
  }

  // Forward with stored activations.
  std::array<Eigen::MatrixXd, 3> act;
  act[0] = ((policy.w[0] * inputs).colwise() + policy.b[0]).cwiseMax(0.0);
  act[1] = ((policy.w[1] * act[0]).colwise() + policy.b[1]).cwiseMax(0.0);
  act[2] = ((policy.w[2] * act[1]).colwise() + policy.b[2]).cwiseMax(0.0);
  Eigen::MatrixXd y = ((policy.w[3] * act[2]).colwise() + policy.b[3]);
  y = y.unaryExpr([](double z) { return sigmoid(z); });

  const Eigen::MatrixXd diff = y - targets;
  const double loss = diff.squaredNorm() / static_cast<double>(4 * n);

  // Reverse pass; dz holds dLoss/d(pre-activation) of the current layer.
  Eigen::MatrixXd dz =
      (2.0 / static_cast<double>(4 * n)) * diff.cwiseProduct(y).cwiseProduct((1.0 - y.array()).matrix());
  grad.w[3] = dz * act[2].transpose();
  grad.b[3] = dz.rowwise().sum();
  for (int l = 2; l >= 0; --l) {
    const Eigen::MatrixXd da = policy.w[l + 1].transpose() * dz;
    // ReLU derivative: pass where the stored activation is positive.
    dz = da.cwiseProduct((act[static_cast<std::size_t>(l)].array() > 0.0).cast<double>().matrix());
    if (l == 0) {
      grad.w[l] = dz * inputs.transpose();
    } else {
      grad.w[l] = dz * act[static_cast<std::size_t>(l - 1)].transpose();
    }
    grad.b[l] = dz.rowwise().sum();
  }
  return loss;
}

void save_policy(const std::filesystem::path& path, const GcnPolicy& policy) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorruptFileError("policy: cannot open " + path.string() + " for writing");
  char head[512];
  const auto sizes = layer_sizes(policy.input_dim());
  const int len = std::snprintf(
      head, sizeof head,
      "QLNET 1\nkind %s\ndims %d %d %d %d %d\nhidden relu\noutput sigmoid\n"
      "pos %.17g\nvel %.17g\nang %.17g\nrate %.17g\nmoment %.17g\n"
      "omega_min %.17g\nomega_max %.17g\nend\n",
      recipe_kind_name(policy.kind), sizes[0], sizes[1], sizes[2], sizes[3], sizes[4],
      policy.norm.pos, policy.norm.vel, policy.norm.ang, policy.norm.rate, policy.norm.moment,
      policy.norm.omega_min, policy.norm.omega_max);
  out.write(head, len);
  for (int l = 0; l < kLayers; ++l) {
    const Eigen::MatrixXd row_major = policy.w[l].transpose();
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(row_major.size())));
    out.write(reinterpret_cast<const char*>(policy.b[l].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(policy.b[l].size())));
  }
  if (!out) throw CorruptFileError("policy: short write to " + path.string());
}

GcnPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("policy: cannot open " + path.string());

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "QLNET") {
    throw CorruptFileError("policy: " + path.string() + " is not a policy file");
  }
  if (version != 1) {
    throw VersionMismatchError("policy: " + path.string() + " has unsupported version " +
                               std::to_string(version));
  }

  GcnPolicy p;
  std::array<int, 5> dims{};
  std::unordered_map<std::string, double> norm;
  std::string key;
  bool have_dims = false, relu_ok = false, sigmoid_ok = false;
  for (int line = 0; line < 64; ++line) {
    if (!(in >> key)) throw CorruptFileError("policy: header of " + path.string() + " truncated");
    if (key == "end") break;
    if (key == "kind") {
      std::string kind;
      in >> kind;
      if (kind == "nominal") {
        p.kind = RecipeKind::Nominal;
      } else if (kind == "adaptive") {
        p.kind = RecipeKind::Adaptive;
      } else if (kind == "waypoint") {
        p.kind = RecipeKind::Waypoint;
      } else {
        throw CorruptFileError("policy: unknown kind '" + kind + "'");
      }
    } else if (key == "dims") {
      for (int& d : dims) {
        if (!(in >> d) || d < 1) throw CorruptFileError("policy: bad dims header");
      }
      have_dims = true;
    } else if (key == "hidden") {
      std::string act;
      in >> act;
      relu_ok = act == "relu";
    } else if (key == "output") {
      std::string act;
      in >> act;
      sigmoid_ok = act == "sigmoid";
    } else {
      double value = 0.0;
      if (!(in >> value)) throw CorruptFileError("policy: header field '" + key + "' unreadable");
      norm[key] = value;
    }
  }
  if (!have_dims || !relu_ok || !sigmoid_ok) {
    throw CorruptFileError("policy: " + path.string() + " misses dims or activation spec");
  }
  const auto expect = layer_sizes(dims[0]);
  if (dims != expect) throw CorruptFileError("policy: unsupported layer sizes");
  auto norm_field = [&](const char* name) {
    const auto it = norm.find(name);
    if (it == norm.end()) {
      throw CorruptFileError(std::string("policy: header misses field '") + name + "'");
    }
    return it->second;
  };
  p.norm.pos = norm_field("pos");
  p.norm.vel = norm_field("vel");
  p.norm.ang = norm_field("ang");
  p.norm.rate = norm_field("rate");
  p.norm.moment = norm_field("moment");
  p.norm.omega_min = norm_field("omega_min");
  p.norm.omega_max = norm_field("omega_max");
  in.ignore(2, '\n');

  for (int l = 0; l < kLayers; ++l) {
    const int rows = dims[l + 1], cols = dims[l];
    Eigen::MatrixXd row_major(cols, rows);  // transpose of w[l]
    auto read_block = [&](double* dst, Eigen::Index count) {
      const std::streamsize bytes = count * static_cast<std::streamsize>(sizeof(double));
      in.read(reinterpret_cast<char*>(dst), bytes);
      if (in.gcount() != bytes) {
        throw CorruptFileError("policy: " + path.string() + " is truncated");
      }
    };
    read_block(row_major.data(), row_major.size());
    p.w[l] = row_major.transpose();
    p.b[l].resize(rows);
    read_block(p.b[l].data(), p.b[l].size());
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw CorruptFileError("policy: " + path.string() + " has trailing bytes");
  }
  return p;
}

}  // namespace quadlab
