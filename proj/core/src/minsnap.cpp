#include "quadlab/dfbc/minsnap.hpp"

#include "quadlab/common.hpp"
#include "quadlab/csv.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>

namespace quadlab {

namespace {

// Falling factorial j(j-1)...(j-r+1); the r-th derivative of s^j carries it.
double dfall(int j, int r) {
  double f = 1.0;
  for (int q = 0; q < r; ++q) f *= static_cast<double>(j - q);
  return j >= r ? f : 0.0;
}

}  // namespace

void SnapProblem::validate() const {
  if (visits.size() < 2) throw ConfigError("minsnap: need at least two visits");
  if (segment_times.size() != visits.size() - 1)
    throw ConfigError("minsnap: need one segment time per leg");
  for (double h : segment_times)
    if (!(h > 0.0)) throw ConfigError("minsnap: segment times must be positive");
  if (order < 4) throw ConfigError("minsnap: snap needs order >= 4");
  if (mu_r <= 0.0 || mu_psi < 0.0) throw ConfigError("minsnap: bad objective weights");
  for (const SnapWaypoint& w : visits)
    if (w.align_velocity && !w.yaw)
      throw ConfigError("minsnap: velocity alignment needs a pinned yaw");
}

int PolyTrajectory::segment_at(double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    acc += times[k];
    if (t < acc) return static_cast<int>(k);
  }
  return static_cast<int>(times.size()) - 1;
}

Eigen::Vector4d PolyTrajectory::sample(double t, int derivative) const {
  double tc = std::min(std::max(t, 0.0), total_time);
  const int k = segment_at(tc);
  for (int q = 0; q < k; ++q) tc -= times[static_cast<std::size_t>(q)];
  const double s = std::min(tc, times[static_cast<std::size_t>(k)]);

  Eigen::Vector4d out;
  for (int a = 0; a < 4; ++a) {
    double acc = 0.0;
    for (int j = order; j >= derivative; --j)
      acc = acc * s + axis[static_cast<std::size_t>(a)](j, k) * dfall(j, derivative);
    out(a) = acc;
  }
  return out;
}

namespace {

// Assembles rows of the constraint matrix in the normalized-time basis,
// where coefficient j of segment k multiplies tau^j with s = tau * h_k.
class ConstraintBuilder {
 public:
  ConstraintBuilder(int order, int segments)
      : order_(order), segments_(segments), per_seg_(order + 1) {}

  int var(int a, int k, int j) const { return (a * segments_ + k) * per_seg_ + j; }
  int vars() const { return 4 * segments_ * per_seg_; }
  int rows() const { return static_cast<int>(b_.size()); }

  // d^r/ds^r of axis a, segment k at tau, weighted, into the current row.
  void add(int a, int k, double tau, int r, double h, double weight) {
    const double hr = std::pow(h, static_cast<double>(r));
    for (int j = r; j <= order_; ++j) {
      const double c = dfall(j, r) * std::pow(tau, static_cast<double>(j - r)) / hr;
      if (c != 0.0) trips_.emplace_back(rows(), var(a, k, j), weight * c);
    }
  }

  void finish(double rhs) { b_.push_back(rhs); }

  Eigen::SparseMatrix<double> matrix() const {
    Eigen::SparseMatrix<double> A(rows(), vars());
    A.setFromTriplets(trips_.begin(), trips_.end());
    return A;
  }
  Eigen::VectorXd rhs() const {
    return Eigen::Map<const Eigen::VectorXd>(b_.data(), static_cast<Eigen::Index>(b_.size()));
  }

 private:
  int order_;
  int segments_;
  int per_seg_;
  std::vector<Eigen::Triplet<double>> trips_;
  std::vector<double> b_;
};

}  // namespace

PolyTrajectory solve_min_snap(const SnapProblem& problem) {
  problem.validate();
  const int ord = problem.order;
  const int n = static_cast<int>(problem.segment_times.size());
  const int per_seg = ord + 1;
  ConstraintBuilder cb(ord, n);

  // Visit pins. Interior positions pin both adjoining segment ends, which
  // doubles as C0 continuity; interior derivative pins touch only the
  // incoming segment and rely on the continuity rows for the outgoing one.
  for (int i = 0; i <= n; ++i) {
    const SnapWaypoint& w = problem.visits[static_cast<std::size_t>(i)];
    const int kin = i - 1;   // segment ending at visit i
    const int kout = i;      // segment starting at visit i
    const double hin = kin >= 0 ? problem.segment_times[static_cast<std::size_t>(kin)] : 0.0;
    const double hout = kout < n ? problem.segment_times[static_cast<std::size_t>(kout)] : 0.0;

    for (int a = 0; a < 3; ++a) {
      if (kin >= 0) {
        cb.add(a, kin, 1.0, 0, hin, 1.0);
        cb.finish(w.position(a));
      }
      if (kout < n) {
        cb.add(a, kout, 0.0, 0, hout, 1.0);
        cb.finish(w.position(a));
      }
    }
    const auto pin3 = [&](const std::optional<Eigen::Vector3d>& v, int r) {
      if (!v) return;
      for (int a = 0; a < 3; ++a) {
        if (kin >= 0)
          cb.add(a, kin, 1.0, r, hin, 1.0);
        else
          cb.add(a, kout, 0.0, r, hout, 1.0);
        cb.finish((*v)(a));
      }
    };
    pin3(w.velocity, 1);
    pin3(w.acceleration, 2);
    pin3(w.jerk, 3);

    if (w.yaw) {
      if (kin >= 0) {
        cb.add(3, kin, 1.0, 0, hin, 1.0);
        cb.finish(*w.yaw);
      }
      if (kout < n) {
        cb.add(3, kout, 0.0, 0, hout, 1.0);
        cb.finish(*w.yaw);
      }
    } else if (kin >= 0 && kout < n) {
      cb.add(3, kin, 1.0, 0, hin, 1.0);
      cb.add(3, kout, 0.0, 0, hout, -1.0);
      cb.finish(0.0);
    }

    if (w.align_velocity) {
      const int k = kin >= 0 ? kin : kout;
      const double tau = kin >= 0 ? 1.0 : 0.0;
      const double h = kin >= 0 ? hin : hout;
      cb.add(0, k, tau, 1, h, std::sin(*w.yaw));
      cb.add(1, k, tau, 1, h, -std::cos(*w.yaw));
      cb.finish(0.0);
    }
  }

  // Interior smoothness: C1..C4 for x,y,z and C1,C2 for yaw.
  for (int i = 1; i < n; ++i) {
    const double hin = problem.segment_times[static_cast<std::size_t>(i - 1)];
    const double hout = problem.segment_times[static_cast<std::size_t>(i)];
    for (int a = 0; a < 4; ++a) {
      const int max_r = a < 3 ? 4 : 2;
      for (int r = 1; r <= max_r; ++r) {
        cb.add(a, i - 1, 1.0, r, hin, 1.0);
        cb.add(a, i, 0.0, r, hout, -1.0);
        cb.finish(0.0);
      }
    }
  }

  const int nv = cb.vars();
  const int nc = cb.rows();
  if (nc > nv) throw SingularKktError("minsnap: more constraints than coefficients");

  // Objective Gram blocks in the normalized basis: integral of the squared
  // r-th derivative over one segment picks up h^(1-2r).
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < 4; ++a) {
    const int r = a < 3 ? 4 : 2;
    const double mu = a < 3 ? problem.mu_r : problem.mu_psi;
    for (int k = 0; k < n; ++k) {
      const double h = problem.segment_times[static_cast<std::size_t>(k)];
      const double scale = mu * std::pow(h, 1.0 - 2.0 * r);
      for (int i = r; i <= ord; ++i)
        for (int j = r; j <= ord; ++j) {
          const double g = dfall(i, r) * dfall(j, r) / static_cast<double>(i + j - 2 * r + 1);
          const int vi = (a * n + k) * per_seg + i;
          const int vj = (a * n + k) * per_seg + j;
          trips.emplace_back(vi, vj, scale * g);
        }
    }
  }

  const Eigen::SparseMatrix<double> A = cb.matrix();
  Eigen::SparseMatrix<double> kkt(nv + nc, nv + nc);
  for (int j = 0; j < A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
      trips.emplace_back(nv + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()), nv + static_cast<int>(it.row()), it.value());
    }
  kkt.setFromTriplets(trips.begin(), trips.end());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success) throw SingularKktError("minsnap: KKT factorization failed");

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);
  rhs.tail(nc) = cb.rhs();
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite())
    throw SingularKktError("minsnap: KKT solve failed");

  // Stationarity is checked relative to the KKT scale, feasibility in
  // absolute units (positions are meters).
  const Eigen::VectorXd resid = kkt * sol - rhs;
  const double scale =
      std::max(1.0, kkt.coeffs().abs().maxCoeff() * sol.lpNorm<Eigen::Infinity>());
  if (resid.lpNorm<Eigen::Infinity>() > 1e-9 * scale)
    throw SingularKktError("minsnap: KKT residual too large");
  if (resid.tail(nc).lpNorm<Eigen::Infinity>() > 1e-8)
    throw SingularKktError("minsnap: constraints violated beyond tolerance");

  PolyTrajectory traj;
  traj.order = ord;
  traj.times = problem.segment_times;
  traj.total_time = 0.0;
  for (double h : problem.segment_times) traj.total_time += h;
  for (int a = 0; a < 4; ++a) {
    traj.axis[static_cast<std::size_t>(a)].resize(per_seg, n);
    for (int k = 0; k < n; ++k) {
      const double h = problem.segment_times[static_cast<std::size_t>(k)];
      double hj = 1.0;
      for (int j = 0; j <= ord; ++j) {
        traj.axis[static_cast<std::size_t>(a)](j, k) = sol((a * n + k) * per_seg + j) / hj;
        hj *= h;
      }
    }
  }
  return traj;
}

PolyTrajectory time_scale(const PolyTrajectory& traj, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("minsnap: time scale must be positive");
  PolyTrajectory out = traj;
  out.total_time = traj.total_time / alpha;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    out.times[k] = traj.times[k] / alpha;
    double aj = 1.0;
    for (int j = 0; j <= traj.order; ++j) {
      for (int a = 0; a < 4; ++a)
        out.axis[static_cast<std::size_t>(a)](j, static_cast<Eigen::Index>(k)) =
            traj.axis[static_cast<std::size_t>(a)](j, static_cast<Eigen::Index>(k)) * aj;
      aj *= alpha;
    }
  }
  return out;
}

double position_snap_cost(const PolyTrajectory& traj) {
  double cost = 0.0;
  for (int a = 0; a < 3; ++a) {
    const Eigen::MatrixXd& c = traj.axis[static_cast<std::size_t>(a)];
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
      const double h = traj.times[static_cast<std::size_t>(k)];
      for (int i = 4; i <= traj.order; ++i)
        for (int j = 4; j <= traj.order; ++j)
          cost += c(i, k) * c(j, k) * dfall(i, 4) * dfall(j, 4) *
                  std::pow(h, static_cast<double>(i + j - 7)) / static_cast<double>(i + j - 7);
    }
  }
  return cost;
}

SnapProblem rectangle_plan(int laps, double total_time) {
  if (laps < 1) throw ConfigError("minsnap: need at least one lap");
  if (!(total_time > 0.0)) throw ConfigError("minsnap: total time must be positive");

  const double z = -1.5;
  const Eigen::Vector3d corners[4] = {{4.0, 0.0, z}, {4.0, 3.0, z}, {0.0, 3.0, z}, {0.0, 0.0, z}};

  SnapProblem prob;
  SnapWaypoint start;
  start.position = Eigen::Vector3d(0.0, 0.0, z);
  start.yaw = 0.0;
  start.velocity = Eigen::Vector3d::Zero();
  start.acceleration = Eigen::Vector3d::Zero();
  prob.visits.push_back(start);

  // Corner yaw winds monotonically: the pinned value is left unwrapped so
  // the polynomial never has to swing back through a -pi jump.
  for (int v = 0; v < 4 * laps; ++v) {
    SnapWaypoint w;
    w.position = corners[v % 4];
    w.yaw = 0.25 * kPi + 0.5 * kPi * static_cast<double>(v);
    w.align_velocity = true;
    prob.visits.push_back(w);
  }
  prob.segment_times.assign(static_cast<std::size_t>(4 * laps),
                            total_time / static_cast<double>(4 * laps));
  return prob;
}

void save_poly_trajectory(const std::filesystem::path& path, const PolyTrajectory& traj) {
  const int per_seg = traj.order + 1;
  const Eigen::Index n = static_cast<Eigen::Index>(traj.times.size());
  Eigen::MatrixXd rows(4 * n, 3 + per_seg);
  for (Eigen::Index k = 0; k < n; ++k)
    for (int a = 0; a < 4; ++a) {
      const Eigen::Index rix = 4 * k + a;
      rows(rix, 0) = static_cast<double>(k);
      rows(rix, 1) = traj.times[static_cast<std::size_t>(k)];
      rows(rix, 2) = static_cast<double>(a);
      rows.block(rix, 3, 1, per_seg) = traj.axis[static_cast<std::size_t>(a)].col(k).transpose();
    }
  std::vector<std::string> cols = {"segment", "duration", "axis"};
  for (int j = 0; j < per_seg; ++j) cols.push_back("c" + std::to_string(j));
  write_csv(path, cols, rows);
}

PolyTrajectory load_poly_trajectory(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.columns.size() < 4 || table.columns[0] != "segment" || table.columns[2] != "axis")
    throw CorruptFileError("minsnap: not a coefficient table: " + path.string());
  const int per_seg = static_cast<int>(table.columns.size()) - 3;
  if (table.data.rows() % 4 != 0 || table.data.rows() == 0)
    throw CorruptFileError("minsnap: coefficient table must have 4 rows per segment");
  const Eigen::Index n = table.data.rows() / 4;

  PolyTrajectory traj;
  traj.order = per_seg - 1;
  traj.times.assign(static_cast<std::size_t>(n), 0.0);
  for (auto& m : traj.axis) m = Eigen::MatrixXd::Zero(per_seg, n);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(4, n);
  for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
    const Eigen::Index k = static_cast<Eigen::Index>(table.data(r, 0));
    const int a = static_cast<int>(table.data(r, 2));
    if (k < 0 || k >= n || a < 0 || a > 3)
      throw CorruptFileError("minsnap: segment or axis index out of range");
    if (seen(a, k)++) throw CorruptFileError("minsnap: duplicate coefficient row");
    const double h = table.data(r, 1);
    if (!(h > 0.0)) throw CorruptFileError("minsnap: non-positive segment duration");
    if (traj.times[static_cast<std::size_t>(k)] == 0.0)
      traj.times[static_cast<std::size_t>(k)] = h;
    else if (traj.times[static_cast<std::size_t>(k)] != h)
      throw CorruptFileError("minsnap: inconsistent segment durations");
    traj.axis[static_cast<std::size_t>(a)].col(k) =
        table.data.row(r).segment(3, per_seg).transpose();
  }
  if (seen.minCoeff() == 0) throw CorruptFileError("minsnap: missing coefficient rows");
  traj.total_time = 0.0;
  for (double h : traj.times) traj.total_time += h;
  return traj;
}

}  // namespace quadlab
