#include "quadlab/data/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace quadlab {

namespace {

constexpr double kDeg = kPi / 180.0;

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw InfeasibleBoundsError(std::string("recipe interval ") + name + " is ill-ordered");
  }
}

}  // namespace

const char* recipe_kind_name(RecipeKind kind) {
  switch (kind) {
    case RecipeKind::Nominal: return "nominal";
    case RecipeKind::Adaptive: return "adaptive";
    case RecipeKind::Waypoint: return "waypoint";
  }
  return "?";
}

void SamplingRecipe::validate() const {
  check_interval(x, "x");
  check_interval(y, "y");
  check_interval(z, "z");
  check_interval(vx, "vx");
  check_interval(vy, "vy");
  check_interval(vz, "vz");
  check_interval(roll, "roll");
  check_interval(pitch, "pitch");
  check_interval(yaw, "yaw");
  check_interval(p, "p");
  check_interval(q, "q");
  check_interval(r, "r");
  check_interval(mx, "mx");
  check_interval(my, "my");
  check_interval(mz, "mz");
  if (count < 2) throw ConfigError("recipe: need at least 2 trajectories to split");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw ConfigError("recipe: train fraction must lie in (0,1)");
  }
  if (!(omega_min >= 0.0) || !(omega_min < omega_max)) {
    throw ConfigError("recipe: need 0 <= omega_min < omega_max");
  }
  if (segments < 2) throw ConfigError("recipe: need at least 2 segments");
}

VehicleState SamplingRecipe::sample_state(SplitMix64& rng) const {
  // Draw order is part of the file format: changing it changes datasets.
  VehicleState s;
  s.p = Eigen::Vector3d(x.sample(rng), y.sample(rng), z.sample(rng));
  s.v = Eigen::Vector3d(vx.sample(rng), vy.sample(rng), vz.sample(rng));
  s.euler = Eigen::Vector3d(roll.sample(rng), pitch.sample(rng), yaw.sample(rng));
  s.rates = Eigen::Vector3d(p.sample(rng), q.sample(rng), r.sample(rng));
  for (int i = 0; i < 4; ++i) s.rotor(i) = rng.uniform(omega_min, omega_max);
  return s;
}

Eigen::Vector3d SamplingRecipe::sample_moment(SplitMix64& rng) const {
  if (kind == RecipeKind::Nominal) return Eigen::Vector3d::Zero();
  return {mx.sample(rng), my.sample(rng), mz.sample(rng)};
}

NormalizationSpec SamplingRecipe::normalization() const {
  NormalizationSpec n;
  n.omega_min = omega_min;
  n.omega_max = omega_max;
  return n;
}

OcpSpec SamplingRecipe::to_ocp(const VehicleState& x0, const Eigen::Vector3d& m_ext) const {
  OcpSpec spec;
  spec.params.omega_min = omega_min;
  spec.params.omega_max = omega_max;
  spec.x0 = x0;
  spec.m_ext = m_ext;
  spec.terminal = terminal;
  spec.target_yaw = target_yaw;
  spec.segments = segments;
  return spec;
}

std::vector<SamplingRecipe> builtin_recipes(double scale) {
  if (!(scale > 0.0)) throw ConfigError("recipe scale must be positive");
  auto scaled = [scale](double base) {
    return static_cast<std::size_t>(std::max<long long>(2, std::llround(base * scale)));
  };

  SamplingRecipe nominal;
  nominal.kind = RecipeKind::Nominal;
  nominal.name = "nominal";
  nominal.x = nominal.y = {-5.0, 5.0};
  nominal.z = {-1.0, 1.0};
  nominal.vx = nominal.vy = nominal.vz = {-0.5, 0.5};
  nominal.roll = nominal.pitch = {-40.0 * kDeg, 40.0 * kDeg};
  nominal.yaw = {-kPi, kPi};
  nominal.p = nominal.q = nominal.r = {-1.0, 1.0};
  nominal.omega_min = 5000.0;
  nominal.omega_max = 10000.0;
  nominal.terminal = TerminalKind::HoverRest;
  nominal.count = scaled(2000.0);
  nominal.paper_count = 100000;
  nominal.seed = 1;

  SamplingRecipe adaptive = nominal;
  adaptive.kind = RecipeKind::Adaptive;
  adaptive.name = "adaptive";
  adaptive.mx = adaptive.my = {-0.04, 0.04};
  adaptive.mz = {-0.01, 0.01};
  adaptive.seed = 2;

  SamplingRecipe waypoint = adaptive;
  waypoint.kind = RecipeKind::Waypoint;
  waypoint.name = "waypoint";
  waypoint.x = {-5.0, -2.0};
  waypoint.y = {-1.0, 1.0};
  waypoint.z = {-0.5, 0.5};
  waypoint.vx = {-0.5, 5.0};
  waypoint.vy = {-3.0, 3.0};
  waypoint.vz = {-1.0, 1.0};
  waypoint.yaw = {-60.0 * kDeg, 60.0 * kDeg};
  waypoint.omega_min = 3000.0;
  waypoint.omega_max = 12000.0;
  waypoint.terminal = TerminalKind::WaypointPass;
  waypoint.target_yaw = kPi / 4.0;
  waypoint.count = scaled(1000.0);
  waypoint.paper_count = 10000;
  waypoint.seed = 3;

  return {nominal, adaptive, waypoint};
}

SamplingRecipe recipe_named(const std::string& name, double scale) {
  for (auto& r : builtin_recipes(scale)) {
    if (r.name == name) return r;
  }
  throw ConfigError("unknown recipe '" + name + "' (expected nominal, adaptive, or waypoint)");
}

Eigen::VectorXd assemble_inputs(const VehicleState& state,
                                const std::optional<Eigen::Vector3d>& m_ext,
                                const std::optional<Eigen::Vector3d>& waypoint, RecipeKind kind,
                                const NormalizationSpec& norm) {
  const bool wants_moment = kind != RecipeKind::Nominal;
  if (wants_moment && !m_ext) {
    throw DimensionMismatchError("assemble_inputs: this network kind takes moment inputs");
  }
  if (!wants_moment && m_ext) {
    throw DimensionMismatchError("assemble_inputs: nominal networks have no moment inputs");
  }
  Eigen::VectorXd in(wants_moment ? 19 : 16);
  const Eigen::Vector3d wp = waypoint.value_or(Eigen::Vector3d::Zero());
  in.segment<3>(0) = (state.p - wp) / norm.pos;
  in.segment<3>(3) = state.v / norm.vel;
  in.segment<3>(6) = state.euler / norm.ang;
  in.segment<3>(9) = state.rates / norm.rate;
  in.segment<4>(12) = (state.rotor.array() - norm.omega_min) / (norm.omega_max - norm.omega_min);
  if (wants_moment) in.segment<3>(16) = *m_ext / norm.moment;
  return in;
}

GenerationResult generate(const SamplingRecipe& recipe, int workers,
                          const SolverSettings& solver) {
  recipe.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t count = recipe.count;
  const int dim = recipe.input_dim();
  const int nodes = recipe.segments + 1;
  const NormalizationSpec norm = recipe.normalization();

  struct Slot {
    bool kept = false;
    Eigen::MatrixXd inputs;
    Eigen::Matrix<double, 4, Eigen::Dynamic> targets;
  };
  std::vector<Slot> slots(count);
  std::atomic<std::size_t> cursor{0};
  std::atomic<std::size_t> attempted{0};

  // Parallel map over trajectory indices. Every attempt owns a substream
  // derived from (seed, index), so the merge below is byte-stable for any
  // worker count or schedule.
  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= count) return;
      Slot& slot = slots[i];
      for (int attempt = 0; attempt < 2 && !slot.kept; ++attempt) {
        SplitMix64 rng(substream_seed(recipe.seed, i + static_cast<std::size_t>(attempt) * count));
        const VehicleState x0 = recipe.sample_state(rng);
        const Eigen::Vector3d m_ext = recipe.sample_moment(rng);
        attempted.fetch_add(1);
        OptimalTrajectory traj;
        try {
          traj = solve_ocp(recipe.to_ocp(x0, m_ext), solver);
        } catch (const GimbalLockError&) {
          continue;  // the iterate pitched through +-90 deg; redraw
        }
        if (!traj.converged) continue;
        slot.inputs.resize(dim, nodes);
        slot.targets.resize(4, nodes);
        const std::optional<Eigen::Vector3d> m =
            recipe.has_moment_inputs() ? std::optional<Eigen::Vector3d>(m_ext) : std::nullopt;
        for (int k = 0; k < nodes; ++k) {
          const VehicleState s = VehicleState::unpack(traj.states.row(k).transpose());
          slot.inputs.col(k) = assemble_inputs(s, m, std::nullopt, recipe.kind, norm);
          slot.targets.col(k) = traj.controls.row(k).transpose();
        }
        slot.kept = true;
      }
    }
  };

  const int nthreads = std::clamp(workers, 1, 64);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads) - 1);
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<std::size_t> keep;
  keep.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (slots[i].kept) keep.push_back(i);
  }
  const std::size_t kept = keep.size();
  if (kept * 5 < count * 4) {
    std::ostringstream msg;
    msg << "dataset generation: only " << kept << " of " << count
        << " trajectories converged (need 80%)";
    throw ConvergenceRateError(msg.str());
  }

  std::size_t n_train = static_cast<std::size_t>(std::llround(recipe.train_fraction * kept));
  n_train = std::clamp<std::size_t>(n_train, 1, kept - 1);

  auto assemble = [&](std::size_t begin, std::size_t end) {
    Dataset d;
    d.kind = recipe.kind;
    d.norm = norm;
    d.inputs.resize(dim, static_cast<Eigen::Index>(end - begin) * nodes);
    d.targets.resize(4, d.inputs.cols());
    Eigen::Index col = 0;
    for (std::size_t j = begin; j < end; ++j) {
      const Slot& slot = slots[keep[j]];
      d.inputs.middleCols(col, nodes) = slot.inputs;
      d.targets.middleCols(col, nodes) = slot.targets;
      col += nodes;
    }
    return d;
  };

  GenerationResult result;
  result.train = assemble(0, n_train);
  result.test = assemble(n_train, kept);
  result.report.attempted = attempted.load();
  result.report.converged = kept;
  result.report.kept = kept;
  result.report.train_trajectories = n_train;
  result.report.test_trajectories = kept - n_train;
  result.report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorruptFileError("dataset: cannot open " + path.string() + " for writing");
  char head[512];
  const int len = std::snprintf(
      head, sizeof head,
      "QLDATA 1\nkind %s\ndim %d\npairs %lld\npos %.17g\nvel %.17g\nang %.17g\nrate %.17g\n"
      "moment %.17g\nomega_min %.17g\nomega_max %.17g\nend\n",
      recipe_kind_name(d.kind), d.dim(), static_cast<long long>(d.size()), d.norm.pos, d.norm.vel,
      d.norm.ang, d.norm.rate, d.norm.moment, d.norm.omega_min, d.norm.omega_max);
  out.write(head, len);
  out.write(reinterpret_cast<const char*>(d.inputs.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(d.inputs.size())));
  out.write(reinterpret_cast<const char*>(d.targets.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(d.targets.size())));
  if (!out) throw CorruptFileError("dataset: short write to " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("dataset: cannot open " + path.string());

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "QLDATA") {
    throw CorruptFileError("dataset: " + path.string() + " is not a dataset file");
  }
  if (version != 1) {
    throw VersionMismatchError("dataset: " + path.string() + " has unsupported version " +
                               std::to_string(version));
  }

  std::unordered_map<std::string, std::string> fields;
  std::string key;
  for (int line = 0; line < 64; ++line) {
    if (!(in >> key)) throw CorruptFileError("dataset: header of " + path.string() + " truncated");
    if (key == "end") break;
    std::string value;
    if (!(in >> value)) {
      throw CorruptFileError("dataset: header field '" + key + "' has no value");
    }
    fields[key] = value;
  }
  in.ignore(2, '\n');  // consume the newline after "end"

  auto field = [&](const char* name) -> const std::string& {
    const auto it = fields.find(name);
    if (it == fields.end()) {
      throw CorruptFileError(std::string("dataset: header misses field '") + name + "'");
    }
    return it->second;
  };

  Dataset d;
  const std::string& kind = field("kind");
  if (kind == "nominal") {
    d.kind = RecipeKind::Nominal;
  } else if (kind == "adaptive") {
    d.kind = RecipeKind::Adaptive;
  } else if (kind == "waypoint") {
    d.kind = RecipeKind::Waypoint;
  } else {
    throw CorruptFileError("dataset: unknown kind '" + kind + "'");
  }
  const long long dim = std::stoll(field("dim"));
  const long long pairs = std::stoll(field("pairs"));
  if (dim <= 0 || pairs < 0) throw CorruptFileError("dataset: nonsensical dimensions");
  d.norm.pos = std::stod(field("pos"));
  d.norm.vel = std::stod(field("vel"));
  d.norm.ang = std::stod(field("ang"));
  d.norm.rate = std::stod(field("rate"));
  d.norm.moment = std::stod(field("moment"));
  d.norm.omega_min = std::stod(field("omega_min"));
  d.norm.omega_max = std::stod(field("omega_max"));

  d.inputs.resize(dim, pairs);
  d.targets.resize(4, pairs);
  auto read_block = [&](double* dst, std::streamsize n) {
    in.read(reinterpret_cast<char*>(dst), n * static_cast<std::streamsize>(sizeof(double)));
    if (in.gcount() != n * static_cast<std::streamsize>(sizeof(double))) {
      throw CorruptFileError("dataset: " + path.string() + " is truncated");
    }
  };
  read_block(d.inputs.data(), d.inputs.size());
  read_block(d.targets.data(), d.targets.size());
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw CorruptFileError("dataset: " + path.string() + " has trailing bytes");
  }
  return d;
}

void write_generated(const std::filesystem::path& dir, const SamplingRecipe& recipe,
                     const GenerationResult& result) {
  std::filesystem::create_directories(dir);
  save_dataset(dir / "train.qld", result.train);
  save_dataset(dir / "test.qld", result.test);

  // Wall time deliberately omitted: reruns with one seed must be byte-stable.
  std::ofstream m(dir / "manifest.json", std::ios::trunc);
  m << "{\n"
    << "  \"recipe\": \"" << recipe.name << "\",\n"
    << "  \"kind\": \"" << recipe_kind_name(recipe.kind) << "\",\n"
    << "  \"seed\": " << recipe.seed << ",\n"
    << "  \"segments\": " << recipe.segments << ",\n"
    << "  \"input_dim\": " << recipe.input_dim() << ",\n"
    << "  \"paper_trajectories\": " << recipe.paper_count << ",\n"
    << "  \"trajectories\": {\"requested\": " << recipe.count << ", \"kept\": "
    << result.report.kept << ", \"train\": " << result.report.train_trajectories
    << ", \"test\": " << result.report.test_trajectories << "},\n"
    << "  \"solves\": {\"attempted\": " << result.report.attempted << ", \"converged\": "
    << result.report.converged << "},\n"
    << "  \"pairs\": {\"train\": " << result.train.size() << ", \"test\": " << result.test.size()
    << "}\n"
    << "}\n";
  if (!m) throw CorruptFileError("dataset: cannot write manifest under " + dir.string());
}

}  // namespace quadlab
