#include "quadlab/trajopt/solver.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <vector>

namespace quadlab {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

NlpResult solve_nlp(Transcription& nlp, const Eigen::VectorXd& zeta0,
                    const SolverSettings& settings) {
  const Eigen::VectorXd& lo = nlp.lower();
  const Eigen::VectorXd& hi = nlp.upper();
  const int nz = nlp.var_count();
  const int nc = nlp.constraint_count();

  const auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v.cwiseMax(lo).cwiseMin(hi);
  };

  Eigen::VectorXd zeta = project(zeta0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nc);
  double rho = settings.rho0;
  // Classic update/bump schedules: omega is the inner tolerance, eta the
  // feasibility gate for multiplier updates; both loosen again on penalty
  // increases and tighten after successful updates.
  const double omega0 = 1e-2, eta0 = 0.1;
  const double omega_floor = 0.3 * settings.kkt_tol;
  const double eta_floor = 0.5 * settings.feas_tol;
  double omega = omega0;
  double eta = eta0;

  Eigen::VectorXd c(nc), grad_f(nz), jt(nz), grad_phi(nz);
  double f = 0.0;

  const auto eval_point = [&](const Eigen::VectorXd& point) {
    f = nlp.eval_fcj(point, grad_f, c);
    nlp.apply_jt(rho * c - lambda, jt);
    grad_phi = grad_f + jt;
    return f - lambda.dot(c) + 0.5 * rho * c.squaredNorm();
  };
  const auto phi_only = [&](const Eigen::VectorXd& point, Eigen::VectorXd& ct) {
    const double ft = nlp.eval_fc(point, ct);
    return ft - lambda.dot(ct) + 0.5 * rho * ct.squaredNorm();
  };
  const auto projected_gradient_norm = [&](const Eigen::VectorXd& point,
                                           const Eigen::VectorXd& g) {
    return (point - project(point - g)).lpNorm<Eigen::Infinity>();
  };

  NlpResult result;
  int total_inner = 0;
  int consecutive_ls_failures = 0;

  Eigen::VectorXd c_trial(nc);
  Eigen::SparseMatrix<double> h_full;
  std::vector<int> free_of(nz);
  double mu = 1e-6;  // Levenberg damping, adapted on step quality

  double phi = eval_point(zeta);
  for (int outer = 0; outer < settings.max_outer; ++outer) {
    result.outer_iters = outer + 1;
    bool last_round_ls_failure = false;

    // Inner round: projected Levenberg-Marquardt steps with a Gauss-Newton
    // model Hessian on the free subspace. A round concludes on the inner
    // tolerance, a step at the numerical floor, or an exhausted damping
    // range; the iteration budget only pauses it until the next outer pass.
    bool concluded = false;
    for (int it = 0; it < settings.inner_round; ++it) {
      if (total_inner >= settings.max_inner_total) break;
      if (projected_gradient_norm(zeta, grad_phi) <= omega) {
        concluded = true;
        break;
      }
      ++total_inner;

      // Free subspace at the current point.
      int nf = 0;
      for (int i = 0; i < nz; ++i) {
        const bool pinned = lo(i) == hi(i);
        const bool at_lo = zeta(i) <= lo(i) && grad_phi(i) > 0.0;
        const bool at_hi = zeta(i) >= hi(i) && grad_phi(i) < 0.0;
        free_of[i] = (pinned || at_lo || at_hi) ? -1 : nf++;
      }
      if (nf == 0) {
        concluded = true;
        break;
      }

      nlp.gn_hessian(zeta, rho, h_full);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(h_full.nonZeros()));
      for (int col = 0; col < h_full.outerSize(); ++col) {
        if (free_of[col] < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator itr(h_full, col); itr; ++itr) {
          if (free_of[itr.row()] >= 0) {
            trips.emplace_back(free_of[itr.row()], free_of[col], itr.value());
          }
        }
      }
      Eigen::SparseMatrix<double> h_free(nf, nf);
      h_free.setFromTriplets(trips.begin(), trips.end());
      Eigen::VectorXd g_free(nf), diag(nf);
      for (int i = 0; i < nz; ++i) {
        if (free_of[i] >= 0) g_free(free_of[i]) = grad_phi(i);
      }
      for (int i = 0; i < nf; ++i) diag(i) = std::max(h_free.coeff(i, i), 1e-8);

      // Scale-invariant damping H + mu diag(H): reject/re-solve until the
      // actual reduction is a reasonable fraction of the model's prediction.
      bool accepted = false;
      bool made_progress = false;
      Eigen::VectorXd zeta_trial, step, d_free(nf);
      double phi_trial = phi;
      for (int attempt = 0; attempt < 25; ++attempt) {
        Eigen::SparseMatrix<double> h_damped = h_free;
        for (int i = 0; i < nf; ++i) h_damped.coeffRef(i, i) += mu * diag(i);
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(h_damped);
        bool usable = ldlt.info() == Eigen::Success;
        if (usable) {
          d_free = ldlt.solve(-g_free);
          usable = d_free.allFinite();
        }
        if (usable) {
          Eigen::VectorXd d = Eigen::VectorXd::Zero(nz);
          for (int i = 0; i < nz; ++i) {
            if (free_of[i] >= 0) d(i) = d_free(free_of[i]);
          }
          zeta_trial = project(zeta + d);
          step = zeta_trial - zeta;
          if (step.lpNorm<Eigen::Infinity>() < 1e-18) {
            concluded = true;  // damping pinned the step to the active box
            break;
          }
          phi_trial = phi_only(zeta_trial, c_trial);
          Eigen::VectorXd s_free(nf);
          for (int i = 0; i < nz; ++i) {
            if (free_of[i] >= 0) s_free(free_of[i]) = step(i);
          }
          const double pred =
              -g_free.dot(s_free) - 0.5 * s_free.dot(h_free.selfadjointView<Eigen::Lower>() *
                                                     s_free);
          if (std::isfinite(phi_trial) && phi - phi_trial > 0.0 && pred > 0.0) {
            const double ratio = (phi - phi_trial) / pred;
            accepted = true;
            if (ratio > 0.75) {
              mu = std::max(mu / 3.0, 1e-12);
            } else if (ratio < 0.25) {
              mu = std::min(mu * 4.0, 1e12);
            }
            break;
          }
        }
        mu = std::min(std::max(mu * 6.0, 1e-10), 1e13);
        if (mu >= 1e13) break;
      }
      if (concluded) break;
      if (!accepted) {
        last_round_ls_failure = true;
        concluded = true;
        break;
      }

      made_progress = phi - phi_trial > 1e-15 * (1.0 + std::abs(phi));
      const double step_norm = step.lpNorm<Eigen::Infinity>();
      zeta = zeta_trial;
      phi = eval_point(zeta);
      if (!made_progress && step_norm <= 1e-12 * (1.0 + zeta.lpNorm<Eigen::Infinity>())) {
        concluded = true;  // at the numerical floor for this subproblem
        break;
      }
    }

    const double feas = c.lpNorm<Eigen::Infinity>();
    result.feasibility = feas;
    if (concluded) {
      consecutive_ls_failures = last_round_ls_failure ? consecutive_ls_failures + 1 : 0;
      if (feas <= std::max(eta, settings.feas_tol)) {
        lambda -= rho * c;
        lambda = lambda.cwiseMax(-1e10).cwiseMin(1e10);
        nlp.apply_jt(-lambda, jt);
        const double kkt = projected_gradient_norm(zeta, grad_f + jt);
        result.kkt = kkt;
        if (feas <= settings.feas_tol && kkt <= settings.kkt_tol) {
          result.status = SolveStatus::Converged;
          break;
        }
        eta = std::max(eta / std::pow(rho, 0.9), eta_floor);
        omega = std::max(omega / rho, omega_floor);
      } else {
        rho = std::min(rho * settings.rho_growth, settings.rho_max);
        eta = std::max(eta0 / std::pow(rho, 0.1), eta_floor);
        omega = std::max(omega0 / rho, omega_floor);
      }
      // lambda or rho changed: the augmented objective changed shape.
      phi = eval_point(zeta);
      if (consecutive_ls_failures >= 3) break;
    }
    if (settings.verbose) {
      std::printf("outer %2d  f=%.6e feas=%.3e rho=%.1e omega=%.1e inner=%d%s\n", outer, f,
                  feas, rho, omega, total_inner, last_round_ls_failure ? " [ls-fail]" : "");
    }
    if (total_inner >= settings.max_inner_total) break;
  }

  result.zeta = zeta;
  result.lambda = lambda;
  result.inner_iters = total_inner;
  result.objective = f;
  if (result.status != SolveStatus::Converged) {
    result.status = (consecutive_ls_failures >= 3) ? SolveStatus::LineSearchFailure
                                                   : SolveStatus::MaxIterations;
    (void)eval_point(zeta);
    result.feasibility = c.lpNorm<Eigen::Infinity>();
    nlp.apply_jt(-lambda, jt);
    result.kkt = projected_gradient_norm(zeta, grad_f + jt);
    result.objective = f;
  }
  return result;
}

}  // namespace quadlab
