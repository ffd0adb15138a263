#include "quadlab/data/dataset.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace quadlab;

namespace {

// Kolmogorov-Smirnov statistic of `v` against the uniform law on [lo, hi].
double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small fast-converging hover recipe for generation tests.
SamplingRecipe tiny_recipe() {
  SamplingRecipe t;
  t.kind = RecipeKind::Nominal;
  t.name = "tiny";
  t.x = t.y = {-1.0, 1.0};
  t.z = {-0.3, 0.3};
  t.vx = t.vy = t.vz = {-0.3, 0.3};
  t.roll = t.pitch = {-0.2, 0.2};
  t.yaw = {-0.5, 0.5};
  t.p = t.q = t.r = {-0.3, 0.3};
  t.omega_min = 5000.0;
  t.omega_max = 10000.0;
  t.terminal = TerminalKind::HoverRest;
  t.segments = 8;
  t.count = 5;
  t.paper_count = 5;
  t.train_fraction = 0.8;
  t.seed = 7;
  return t;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "quadlab_dataset_test") {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("builtin recipes carry the published sampling intervals") {
  const auto recipes = builtin_recipes();
  REQUIRE(recipes.size() == 3);
  const SamplingRecipe& nom = recipes[0];
  const SamplingRecipe& ada = recipes[1];
  const SamplingRecipe& wp = recipes[2];

  CHECK(nom.kind == RecipeKind::Nominal);
  CHECK(nom.x.lo == -5.0);
  CHECK(nom.x.hi == 5.0);
  CHECK(nom.z.lo == -1.0);
  CHECK(nom.vy.hi == 0.5);
  CHECK(nom.roll.hi == doctest::Approx(40.0 * kPi / 180.0));
  CHECK(nom.yaw.lo == doctest::Approx(-kPi));
  CHECK(nom.q.lo == -1.0);
  CHECK(nom.omega_min == 5000.0);
  CHECK(nom.omega_max == 10000.0);
  CHECK(nom.mx.lo == 0.0);  // no external-moment block
  CHECK(nom.mx.hi == 0.0);
  CHECK(nom.paper_count == 100000);
  CHECK(nom.count == 2000);
  CHECK(nom.train_fraction == 0.9);
  CHECK(nom.input_dim() == 16);
  CHECK(nom.terminal == TerminalKind::HoverRest);

  CHECK(ada.kind == RecipeKind::Adaptive);
  CHECK(ada.mx.lo == -0.04);
  CHECK(ada.my.hi == 0.04);
  CHECK(ada.mz.lo == -0.01);
  CHECK(ada.mz.hi == 0.01);
  CHECK(ada.input_dim() == 19);
  CHECK(ada.x.hi == 5.0);  // shares the nominal state intervals

  CHECK(wp.kind == RecipeKind::Waypoint);
  CHECK(wp.x.lo == -5.0);
  CHECK(wp.x.hi == -2.0);
  CHECK(wp.vx.lo == -0.5);
  CHECK(wp.vx.hi == 5.0);
  CHECK(wp.vy.lo == -3.0);
  CHECK(wp.vz.hi == 1.0);
  CHECK(wp.yaw.hi == doctest::Approx(60.0 * kPi / 180.0));
  CHECK(wp.omega_min == 3000.0);
  CHECK(wp.omega_max == 12000.0);
  CHECK(wp.terminal == TerminalKind::WaypointPass);
  CHECK(wp.target_yaw == doctest::Approx(kPi / 4.0));
  CHECK(wp.paper_count == 10000);
  CHECK(wp.count == 1000);
  CHECK(wp.mz.hi == 0.01);  // waypoint solves reuse the adaptive moment draw

  for (const auto& r : recipes) {
    CHECK_NOTHROW(r.validate());
    CHECK(r.segments == 30);
  }

  CHECK(builtin_recipes(0.01)[0].count == 20);
  CHECK(builtin_recipes(1e-9)[0].count == 2);  // floor keeps the split possible
  CHECK(recipe_named("waypoint").kind == RecipeKind::Waypoint);
  CHECK_THROWS_AS((void)recipe_named("bogus"), ConfigError);
  CHECK_THROWS_AS((void)builtin_recipes(0.0), ConfigError);
}

TEST_CASE("recipe validation rejects ill-formed fields") {
  SamplingRecipe r = tiny_recipe();
  r.x = {2.0, -2.0};
  CHECK_THROWS_AS(r.validate(), InfeasibleBoundsError);

  r = tiny_recipe();
  r.train_fraction = 1.0;
  CHECK_THROWS_AS(r.validate(), ConfigError);

  r = tiny_recipe();
  r.count = 1;
  CHECK_THROWS_AS(r.validate(), ConfigError);

  r = tiny_recipe();
  r.omega_min = r.omega_max;
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("sampled initial conditions are uniform on their intervals") {
  const SamplingRecipe nom = builtin_recipes()[0];
  SplitMix64 rng(2024);
  const int n = 10000;
  std::vector<std::vector<double>> channel(16);
  for (auto& c : channel) c.reserve(n);
  for (int i = 0; i < n; ++i) {
    const VehicleState s = nom.sample_state(rng);
    const Vec16 packed = s.pack();
    for (int k = 0; k < 16; ++k) channel[static_cast<std::size_t>(k)].push_back(packed(k));
  }
  const Interval bounds[16] = {nom.x,    nom.y,     nom.z,
                               nom.vx,   nom.vy,    nom.vz,
                               nom.roll, nom.pitch, nom.yaw,
                               nom.p,    nom.q,     nom.r,
                               {nom.omega_min, nom.omega_max},
                               {nom.omega_min, nom.omega_max},
                               {nom.omega_min, nom.omega_max},
                               {nom.omega_min, nom.omega_max}};
  for (int k = 0; k < 16; ++k) {
    const auto& c = channel[static_cast<std::size_t>(k)];
    for (double v : c) CHECK(bounds[k].contains(v));
    CHECK(ks_uniform(c, bounds[k].lo, bounds[k].hi) < 0.02);
  }
}

TEST_CASE("assembled inputs follow the waypoint-relative normalized layout") {
  NormalizationSpec norm;
  norm.omega_min = 5000.0;
  norm.omega_max = 10000.0;

  VehicleState s;
  s.rotor.setConstant(5000.0);

  // Hovering exactly at the waypoint: position inputs vanish.
  s.p = Eigen::Vector3d(1.0, -2.0, 0.5);
  Eigen::VectorXd in = assemble_inputs(s, std::nullopt, Eigen::Vector3d(1.0, -2.0, 0.5),
                                       RecipeKind::Nominal, norm);
  REQUIRE(in.size() == 16);
  CHECK(in.segment<3>(0).norm() == 0.0);
  CHECK(in.segment<4>(12).norm() == 0.0);  // rotors at omega_min map to 0

  // Waypoint one meter ahead: first input is -1 m scaled by the 5 m unit.
  s.p.setZero();
  in = assemble_inputs(s, std::nullopt, Eigen::Vector3d(1.0, 0.0, 0.0), RecipeKind::Nominal, norm);
  CHECK(in(0) == doctest::Approx(-1.0 / 5.0));

  // Omitted waypoint means origin; full scaling map spot-check.
  s.p = Eigen::Vector3d(2.5, 0.0, 0.0);
  s.v = Eigen::Vector3d(0.0, -1.0, 0.0);
  s.euler = Eigen::Vector3d(0.0, 0.0, kPi / 2.0);
  s.rates = Eigen::Vector3d(0.0, kPi, 0.0);
  s.rotor.setConstant(10000.0);
  in = assemble_inputs(s, std::nullopt, std::nullopt, RecipeKind::Nominal, norm);
  CHECK(in(0) == doctest::Approx(0.5));
  CHECK(in(4) == doctest::Approx(-0.2));
  CHECK(in(8) == doctest::Approx(0.5));
  CHECK(in(10) == doctest::Approx(0.5));
  CHECK(in(12) == doctest::Approx(1.0));

  // Adaptive kinds append the scaled moment block.
  Eigen::VectorXd ada = assemble_inputs(s, Eigen::Vector3d::Zero(), std::nullopt,
                                        RecipeKind::Adaptive, norm);
  REQUIRE(ada.size() == 19);
  CHECK(ada.segment<3>(16).norm() == 0.0);
  CHECK(ada.segment<16>(0) == in);
  ada = assemble_inputs(s, Eigen::Vector3d(0.04, -0.02, 0.01), std::nullopt, RecipeKind::Waypoint,
                        norm);
  CHECK(ada(16) == doctest::Approx(1.0));
  CHECK(ada(17) == doctest::Approx(-0.5));
  CHECK(ada(18) == doctest::Approx(0.25));

  // Moment presence must match the network kind.
  CHECK_THROWS_AS(
      (void)assemble_inputs(s, Eigen::Vector3d::Zero(), std::nullopt, RecipeKind::Nominal, norm),
      DimensionMismatchError);
  CHECK_THROWS_AS((void)assemble_inputs(s, std::nullopt, std::nullopt, RecipeKind::Adaptive, norm),
                  DimensionMismatchError);
}

TEST_CASE("generation is deterministic, bounded, and split by trajectory") {
  const SamplingRecipe recipe = tiny_recipe();
  const GenerationResult a = generate(recipe, 1);
  const GenerationResult b = generate(recipe, 2);  // worker count must not matter

  const int nodes = recipe.segments + 1;
  CHECK(a.report.kept >= 4);  // >= 80% of 5
  CHECK(a.report.converged == a.report.kept);
  CHECK(a.report.attempted >= a.report.kept);
  CHECK(a.report.train_trajectories + a.report.test_trajectories == a.report.kept);
  CHECK(a.report.test_trajectories >= 1);
  CHECK(a.train.size() == static_cast<Eigen::Index>(a.report.train_trajectories * nodes));
  CHECK(a.test.size() == static_cast<Eigen::Index>(a.report.test_trajectories * nodes));
  CHECK(a.train.size() + a.test.size() <= static_cast<Eigen::Index>(recipe.count * nodes));
  CHECK(a.train.dim() == 16);

  CHECK((a.train.targets.array() >= 0.0).all());
  CHECK((a.train.targets.array() <= 1.0).all());
  CHECK((a.test.targets.array() >= 0.0).all());
  CHECK((a.test.targets.array() <= 1.0).all());

  CHECK(a.train.inputs == b.train.inputs);
  CHECK(a.train.targets == b.train.targets);
  CHECK(a.test.inputs == b.test.inputs);
  CHECK(a.test.targets == b.test.targets);

  TempDir tmp;
  write_generated(tmp.path / "r1", recipe, a);
  write_generated(tmp.path / "r2", recipe, b);
  for (const char* f : {"train.qld", "test.qld", "manifest.json"}) {
    CHECK(slurp(tmp.path / "r1" / f) == slurp(tmp.path / "r2" / f));
  }
  CHECK(slurp(tmp.path / "r1" / "manifest.json").find("tiny") != std::string::npos);
}

TEST_CASE("dataset files round-trip bit-exactly and reject damage") {
  TempDir tmp;
  Dataset d;
  d.kind = RecipeKind::Adaptive;
  d.norm.omega_min = 5000.0;
  d.norm.omega_max = 10000.0;
  d.inputs = Eigen::MatrixXd::Random(19, 37);
  d.targets = Eigen::Matrix<double, 4, Eigen::Dynamic>::Random(4, 37);

  const auto file = tmp.path / "d.qld";
  save_dataset(file, d);
  const Dataset r = load_dataset(file);
  CHECK(r.kind == RecipeKind::Adaptive);
  CHECK(r.norm.omega_min == 5000.0);
  CHECK(r.norm.ang == d.norm.ang);
  REQUIRE(r.inputs.rows() == 19);
  REQUIRE(r.inputs.cols() == 37);
  CHECK(r.inputs == d.inputs);  // bit-exact round trip
  CHECK(r.targets == d.targets);

  CHECK_THROWS_AS((void)load_dataset(tmp.path / "absent.qld"), CorruptFileError);

  std::string bytes = slurp(file);
  {
    std::ofstream out(tmp.path / "magic.qld", std::ios::binary);
    out << "XXDATA" << bytes.substr(6);
  }
  CHECK_THROWS_AS((void)load_dataset(tmp.path / "magic.qld"), CorruptFileError);
  {
    std::ofstream out(tmp.path / "future.qld", std::ios::binary);
    out << "QLDATA 9" << bytes.substr(8);
  }
  CHECK_THROWS_AS((void)load_dataset(tmp.path / "future.qld"), VersionMismatchError);
  {
    std::ofstream out(tmp.path / "short.qld", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 9);
  }
  CHECK_THROWS_AS((void)load_dataset(tmp.path / "short.qld"), CorruptFileError);
  {
    std::ofstream out(tmp.path / "long.qld", std::ios::binary);
    out << bytes << "tail";
  }
  CHECK_THROWS_AS((void)load_dataset(tmp.path / "long.qld"), CorruptFileError);
}

TEST_CASE("a strangled solver budget raises the convergence-rate error") {
  SamplingRecipe recipe = tiny_recipe();
  recipe.count = 3;
  SolverSettings weak;
  weak.max_inner_total = 1;
  weak.max_outer = 1;
  CHECK_THROWS_AS((void)generate(recipe, 1, weak), ConvergenceRateError);
}
