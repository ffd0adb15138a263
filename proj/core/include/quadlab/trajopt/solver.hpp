#pragma once

#include "quadlab/trajopt/transcription.hpp"

#include <Eigen/Dense>

#include <string>

namespace quadlab {

struct SolverSettings {
  double feas_tol = 1e-6;  // scaled constraint inf-norm
  double kkt_tol = 1e-4;   // scaled projected-gradient inf-norm

  double rho0 = 10.0;
  double rho_growth = 10.0;
  double rho_max = 1e8;
  int max_outer = 40;

  int inner_round = 60;  // Newton iteration budget per outer round
  int max_inner_total = 2400;

  bool verbose = false;
};

enum class SolveStatus { Converged, MaxIterations, LineSearchFailure };

std::string to_string(SolveStatus status);

struct NlpResult {
  Eigen::VectorXd zeta;    // scaled primal solution
  Eigen::VectorXd lambda;  // multipliers for the scaled rows
  SolveStatus status = SolveStatus::MaxIterations;
  double feasibility = 0.0;
  double kkt = 0.0;
  double objective = 0.0;
  int outer_iters = 0;
  int inner_iters = 0;
};

/// Bound-constrained augmented-Lagrangian method over the transcription:
/// projected Levenberg-Marquardt steps with a Gauss-Newton model Hessian
/// minimize f - lambda'c + (rho/2)|c|^2 inside the box, multipliers update
/// on sufficient feasibility progress, rho grows otherwise. Fully
/// deterministic for fixed inputs and settings.
NlpResult solve_nlp(Transcription& nlp, const Eigen::VectorXd& zeta0,
                    const SolverSettings& settings = {});

}  // namespace quadlab
