#include "quadlab/trajopt/transcription.hpp"

#include "quadlab/common.hpp"

namespace quadlab {

Transcription::Transcription(const DynamicsModel& model, const TerminalCondition& terminal,
                             int segments, double t_lo, double t_hi, const Eigen::VectorXd& x0,
                             double t_scale)
    : model_(&model),
      terminal_(&terminal),
      N_(segments),
      n_(model.state_dim()),
      m_(model.control_dim()) {
  if (N_ < 1) throw InfeasibleBoundsError("transcription: need at least one segment");
  if (!(t_lo > 0.0) || t_lo > t_hi) {
    throw InfeasibleBoundsError("transcription: need 0 < t_lo <= t_hi");
  }
  if (x0.size() != n_) throw DimensionMismatchError("transcription: x0 has wrong dimension");

  nz_ = (N_ + 1) * (n_ + m_) + 1;
  nc_ = N_ * n_ + terminal_->rows();

  lo_.resize(nz_);
  hi_.resize(nz_);
  Eigen::VectorXd xlo(n_), xhi(n_), ulo(m_), uhi(m_);
  model_->state_box(xlo, xhi);
  model_->control_box(ulo, uhi);
  for (int k = 0; k <= N_; ++k) {
    lo_.segment(x_index(k), n_) = xlo;
    hi_.segment(x_index(k), n_) = xhi;
    lo_.segment(u_index(k), m_) = ulo;
    hi_.segment(u_index(k), m_) = uhi;
  }
  {
    Eigen::VectorXd xNlo = xlo, xNhi = xhi, uNlo = ulo, uNhi = uhi;
    terminal_->fix_bounds(xNlo, xNhi, uNlo, uNhi);
    lo_.segment(x_index(N_), n_) = xNlo;
    hi_.segment(x_index(N_), n_) = xNhi;
    lo_.segment(u_index(N_), m_) = uNlo;
    hi_.segment(u_index(N_), m_) = uNhi;
  }
  if (((x0.array() < xlo.array()) || (x0.array() > xhi.array())).any()) {
    throw InfeasibleBoundsError("transcription: x0 violates the state box");
  }
  lo_.segment(x_index(0), n_) = x0;
  hi_.segment(x_index(0), n_) = x0;
  lo_(t_index()) = t_lo;
  hi_(t_index()) = t_hi;
  if ((lo_.array() > hi_.array()).any()) {
    throw InfeasibleBoundsError("transcription: empty box after pinning");
  }

  scale_.setOnes(nz_);
  const Eigen::VectorXd sx = model_->state_scales();
  for (int k = 0; k <= N_; ++k) scale_.segment(x_index(k), n_) = sx;
  scale_(t_index()) = t_scale;
  // The solver sees scaled coordinates throughout, bounds included.
  lo_ = lo_.cwiseQuotient(scale_);
  hi_ = hi_.cwiseQuotient(scale_);

  row_scale_.resize(nc_);
  for (int k = 0; k < N_; ++k) row_scale_.segment(static_cast<Eigen::Index>(k) * n_, n_) = sx;
  if (terminal_->rows() > 0) row_scale_.tail(terminal_->rows()) = terminal_->row_scales();

  fx_.resize(n_, N_ + 1);
  fm_.resize(n_, N_);
  A_.assign(N_ + 1, Eigen::MatrixXd(n_, n_));
  B_.assign(N_ + 1, Eigen::MatrixXd(n_, m_));
  Am_.assign(N_, Eigen::MatrixXd(n_, n_));
  Bm_.assign(N_, Eigen::MatrixXd(n_, m_));
  Dx0_.assign(N_, Eigen::MatrixXd(n_, n_));
  Dx1_.assign(N_, Eigen::MatrixXd(n_, n_));
  Du0_.assign(N_, Eigen::MatrixXd(n_, m_));
  Du1_.assign(N_, Eigen::MatrixXd(n_, m_));
  DT_.resize(n_, N_);
  term_Jx_.resize(terminal_->rows(), n_);
  term_Ju_.resize(terminal_->rows(), m_);
  xm_.resize(n_);
  um_.resize(m_);
}

Eigen::VectorXd Transcription::scale_point(const Eigen::VectorXd& z) const {
  return z.cwiseQuotient(scale_);
}

Eigen::VectorXd Transcription::unscale_point(const Eigen::VectorXd& zeta) const {
  return zeta.cwiseProduct(scale_);
}

double Transcription::objective(const Eigen::VectorXd& z) const {
  const double h = z(t_index()) / N_;
  double e = 0.0;
  for (int k = 0; k < N_; ++k) {
    const auto uk = z.segment(u_index(k), m_);
    const auto uk1 = z.segment(u_index(k + 1), m_);
    const double um2 = 0.25 * (uk + uk1).squaredNorm();
    e += (h / 6.0) * (uk.squaredNorm() + 4.0 * um2 + uk1.squaredNorm());
  }
  return e;
}

double Transcription::eval_fc(const Eigen::VectorXd& zeta, Eigen::VectorXd& c) const {
  // The const_cast is confined to workspace reuse; no cached Jacobians are
  // produced on this path.
  auto* self = const_cast<Transcription*>(this);
  const Eigen::VectorXd z = unscale_point(zeta);
  c.resize(nc_);
  return self->defects(z, c, false);
}

double Transcription::eval_fcj(const Eigen::VectorXd& zeta, Eigen::VectorXd& grad,
                               Eigen::VectorXd& c) {
  const Eigen::VectorXd z = unscale_point(zeta);
  c.resize(nc_);
  const double e = defects(z, c, true);

  grad.setZero(nz_);
  const double T = z(t_index());
  const double h = T / N_;
  for (int k = 0; k < N_; ++k) {
    const auto uk = z.segment(u_index(k), m_);
    const auto uk1 = z.segment(u_index(k + 1), m_);
    const Eigen::VectorXd um = 0.5 * (uk + uk1);
    grad.segment(u_index(k), m_) += (h / 6.0) * (2.0 * uk + 4.0 * um);
    grad.segment(u_index(k + 1), m_) += (h / 6.0) * (2.0 * uk1 + 4.0 * um);
  }
  grad(t_index()) = e / T;
  grad.array() *= scale_.array();
  return e;
}

void Transcription::evaluate_nodes(const Eigen::VectorXd& z, bool with_jacobians) {
  for (int k = 0; k <= N_; ++k) {
    const auto xk = z.segment(x_index(k), n_);
    const auto uk = z.segment(u_index(k), m_);
    model_->derivative(xk, uk, fx_.col(k));
    if (with_jacobians) model_->jacobians(xk, uk, A_[k], B_[k]);
  }
}

double Transcription::defects(const Eigen::VectorXd& z, Eigen::VectorXd& c,
                              bool with_jacobians) {
  evaluate_nodes(z, with_jacobians);
  const double T = z(t_index());
  const double h = T / N_;
  double e = 0.0;

  for (int k = 0; k < N_; ++k) {
    const auto xk = z.segment(x_index(k), n_);
    const auto xk1 = z.segment(x_index(k + 1), n_);
    const auto uk = z.segment(u_index(k), m_);
    const auto uk1 = z.segment(u_index(k + 1), m_);
    const auto fk = fx_.col(k);
    const auto fk1 = fx_.col(k + 1);

    xm_ = 0.5 * (xk + xk1) + (h / 8.0) * (fk - fk1);
    um_ = 0.5 * (uk + uk1);
    model_->derivative(xm_, um_, fm_.col(k));

    e += (h / 6.0) * (uk.squaredNorm() + 4.0 * um_.squaredNorm() + uk1.squaredNorm());

    c.segment(static_cast<Eigen::Index>(k) * n_, n_) =
        (xk1 - xk - (h / 6.0) * (fk + 4.0 * fm_.col(k) + fk1))
            .cwiseQuotient(row_scale_.segment(static_cast<Eigen::Index>(k) * n_, n_));

    if (with_jacobians) {
      model_->jacobians(xm_, um_, Am_[k], Bm_[k]);
      const Eigen::MatrixXd& Ak = A_[k];
      const Eigen::MatrixXd& Ak1 = A_[k + 1];
      const Eigen::MatrixXd& Bk = B_[k];
      const Eigen::MatrixXd& Bk1 = B_[k + 1];
      const Eigen::MatrixXd AmAk = Am_[k] * Ak;
      const Eigen::MatrixXd AmAk1 = Am_[k] * Ak1;
      Dx0_[k] = -Eigen::MatrixXd::Identity(n_, n_) -
                (h / 6.0) * (Ak + 2.0 * Am_[k] + 0.5 * h * AmAk);
      Dx1_[k] = Eigen::MatrixXd::Identity(n_, n_) -
                (h / 6.0) * (Ak1 + 2.0 * Am_[k] - 0.5 * h * AmAk1);
      Du0_[k] = -(h / 6.0) * (Bk + 0.5 * h * Am_[k] * Bk + 2.0 * Bm_[k]);
      Du1_[k] = -(h / 6.0) * (Bk1 - 0.5 * h * Am_[k] * Bk1 + 2.0 * Bm_[k]);
      DT_.col(k) = (-(1.0 / 6.0) * (fk + 4.0 * fm_.col(k) + fk1) -
                    (h / 12.0) * (Am_[k] * (fk - fk1))) /
                   N_;
    }
  }

  const int tr = terminal_->rows();
  if (tr > 0) {
    const auto xN = z.segment(x_index(N_), n_);
    const auto uN = z.segment(u_index(N_), m_);
    Eigen::VectorXd r(tr);
    terminal_->eval(xN, uN, r);
    c.tail(tr) = r.cwiseQuotient(row_scale_.tail(tr));
    if (with_jacobians) terminal_->jacobian(xN, uN, term_Jx_, term_Ju_);
  }
  return e;
}

void Transcription::apply_jt(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  if (v.size() != nc_) throw DimensionMismatchError("apply_jt: multiplier size mismatch");
  out.setZero(nz_);
  Eigen::VectorXd vk(n_);
  for (int k = 0; k < N_; ++k) {
    vk = v.segment(static_cast<Eigen::Index>(k) * n_, n_)
             .cwiseQuotient(row_scale_.segment(static_cast<Eigen::Index>(k) * n_, n_));
    out.segment(x_index(k), n_).noalias() += Dx0_[k].transpose() * vk;
    out.segment(x_index(k + 1), n_).noalias() += Dx1_[k].transpose() * vk;
    out.segment(u_index(k), m_).noalias() += Du0_[k].transpose() * vk;
    out.segment(u_index(k + 1), m_).noalias() += Du1_[k].transpose() * vk;
    out(t_index()) += DT_.col(k).dot(vk);
  }
  const int tr = terminal_->rows();
  if (tr > 0) {
    const Eigen::VectorXd vt = v.tail(tr).cwiseQuotient(row_scale_.tail(tr));
    out.segment(x_index(N_), n_).noalias() += term_Jx_.transpose() * vt;
    out.segment(u_index(N_), m_).noalias() += term_Ju_.transpose() * vt;
  }
  out.array() *= scale_.array();
}

void Transcription::gn_hessian(const Eigen::VectorXd& zeta, double rho,
                               Eigen::SparseMatrix<double>& h) const {
  const int w = 2 * (n_ + m_) + 1;
  const int tr = terminal_->rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(N_) * w * w +
                static_cast<std::size_t>(tr > 0 ? (n_ + m_) * (n_ + m_) : 0) +
                static_cast<std::size_t>(N_) * m_ * 8);

  Eigen::MatrixXd M(n_, w);
  Eigen::MatrixXd L(w, w);
  std::vector<int> cols(w);
  for (int k = 0; k < N_; ++k) {
    M.leftCols(n_) = Dx0_[k];
    M.middleCols(n_, n_) = Dx1_[k];
    M.middleCols(2 * n_, m_) = Du0_[k];
    M.middleCols(2 * n_ + m_, m_) = Du1_[k];
    M.col(w - 1) = DT_.col(k);
    int ci = 0;
    for (int j = 0; j < n_; ++j) cols[ci++] = x_index(k) + j;
    for (int j = 0; j < n_; ++j) cols[ci++] = x_index(k + 1) + j;
    for (int j = 0; j < m_; ++j) cols[ci++] = u_index(k) + j;
    for (int j = 0; j < m_; ++j) cols[ci++] = u_index(k + 1) + j;
    cols[ci++] = t_index();
    for (int i = 0; i < n_; ++i) M.row(i) /= row_scale_(static_cast<Eigen::Index>(k) * n_ + i);
    for (int j = 0; j < w; ++j) M.col(j) *= scale_(cols[j]);
    L.noalias() = rho * (M.transpose() * M);
    for (int i = 0; i < w; ++i) {
      for (int j = 0; j < w; ++j) {
        if (L(i, j) != 0.0) trips.emplace_back(cols[i], cols[j], L(i, j));
      }
    }
  }

  if (tr > 0) {
    const int wt = n_ + m_;
    Eigen::MatrixXd Mt(tr, wt);
    Mt.leftCols(n_) = term_Jx_;
    Mt.rightCols(m_) = term_Ju_;
    std::vector<int> tcols(wt);
    for (int j = 0; j < n_; ++j) tcols[j] = x_index(N_) + j;
    for (int j = 0; j < m_; ++j) tcols[n_ + j] = u_index(N_) + j;
    for (int i = 0; i < tr; ++i) Mt.row(i) /= row_scale_(nc_ - tr + i);
    for (int j = 0; j < wt; ++j) Mt.col(j) *= scale_(tcols[j]);
    const Eigen::MatrixXd Lt = rho * (Mt.transpose() * Mt);
    for (int i = 0; i < wt; ++i) {
      for (int j = 0; j < wt; ++j) {
        if (Lt(i, j) != 0.0) trips.emplace_back(tcols[i], tcols[j], Lt(i, j));
      }
    }
  }

  // Exact objective Hessian: per segment E_k = (T/(3N))(|u_k|^2 + |u_k1|^2 +
  // u_k . u_k1), so curvature is block tridiagonal in u with a bilinear u-T
  // coupling and no T-T term.
  const double ts = scale_(t_index());
  const double T = zeta(t_index()) * ts;
  const double cseg = T / (3.0 * N_);
  for (int k = 0; k < N_; ++k) {
    const int iu0 = u_index(k);
    const int iu1 = u_index(k + 1);
    const int it = t_index();
    for (int j = 0; j < m_; ++j) {
      const double s0 = scale_(iu0 + j);
      const double s1 = scale_(iu1 + j);
      const double uk = zeta(iu0 + j) * s0;
      const double uk1 = zeta(iu1 + j) * s1;
      trips.emplace_back(iu0 + j, iu0 + j, 2.0 * cseg * s0 * s0);
      trips.emplace_back(iu1 + j, iu1 + j, 2.0 * cseg * s1 * s1);
      trips.emplace_back(iu0 + j, iu1 + j, cseg * s0 * s1);
      trips.emplace_back(iu1 + j, iu0 + j, cseg * s0 * s1);
      const double g0 = (2.0 * uk + uk1) / (3.0 * N_) * s0 * ts;
      const double g1 = (2.0 * uk1 + uk) / (3.0 * N_) * s1 * ts;
      trips.emplace_back(iu0 + j, it, g0);
      trips.emplace_back(it, iu0 + j, g0);
      trips.emplace_back(iu1 + j, it, g1);
      trips.emplace_back(it, iu1 + j, g1);
    }
  }

  h.resize(nz_, nz_);
  h.setFromTriplets(trips.begin(), trips.end());
}

Eigen::MatrixXd Transcription::dense_jacobian() const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nc_, nz_);
  for (int k = 0; k < N_; ++k) {
    const int row = k * n_;
    const auto w = row_scale_.segment(row, n_);
    for (int i = 0; i < n_; ++i) {
      J.block(row + i, x_index(k), 1, n_) = Dx0_[k].row(i) / w(i);
      J.block(row + i, x_index(k + 1), 1, n_) = Dx1_[k].row(i) / w(i);
      J.block(row + i, u_index(k), 1, m_) = Du0_[k].row(i) / w(i);
      J.block(row + i, u_index(k + 1), 1, m_) = Du1_[k].row(i) / w(i);
      J(row + i, t_index()) = DT_(i, k) / w(i);
    }
  }
  const int tr = terminal_->rows();
  if (tr > 0) {
    const int row = N_ * n_;
    const auto w = row_scale_.tail(tr);
    for (int i = 0; i < tr; ++i) {
      J.block(row + i, x_index(N_), 1, n_) = term_Jx_.row(i) / w(i);
      J.block(row + i, u_index(N_), 1, m_) = term_Ju_.row(i) / w(i);
    }
  }
  for (int j = 0; j < nz_; ++j) J.col(j) *= scale_(j);
  return J;
}

}  // namespace quadlab
