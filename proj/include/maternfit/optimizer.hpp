#pragma once

// Fisher scoring with backtracking (Fisher-BT) for the Matern likelihood:
//
//   1. evaluate the nine L9 starting candidates and keep the best;
//   2. repeat a Fisher scoring step phi = I^{-1} grad, halving phi until the
//      relaxed Armijo test passes, until ||grad||_2 <= grad_tol;
//   3. if the call budgets run out first, hand the current iterate to
//      Nelder-Mead and report the Fisher information at its result.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "maternfit/likelihood.hpp"
#include "maternfit/matern.hpp"

namespace maternfit {

struct FisherBTConfig {
  MaternParams theta_lower{0.01, 0.01, 0.01};
  MaternParams theta_upper{5.0, 5.0, 2.0};
  double armijo_c = 0.001;
  double armijo_slack = 0.001;
  double backtrack_rho = 0.5;
  double grad_tol = 0.001;
  int max_loglik_calls = 60;
  int max_grad_calls = 20;
  double nm_tol = 1e-9;
  int max_halvings = 30;
  // Safety cap on the fallback; not part of the shift budget.
  int nm_max_evals = 5000;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class Termination { GradientTol, FallbackConverged, BudgetExhausted };
const char* termination_name(Termination t) noexcept;

struct TracePoint {
  enum class Source { Initial, FisherStep, NelderMead };
  MaternParams theta;
  double loglik = 0.0;
  Source source = Source::Initial;
  // grad . phi for the accepted step (FisherStep only).
  double grad_dot_step = 0.0;
  int halvings = 0;
};

struct OptResult {
  MaternParams theta_hat;
  Eigen::Matrix3d fisher_at_hat = Eigen::Matrix3d::Zero();
  Eigen::Vector3d grad_at_hat = Eigen::Vector3d::Zero();
  double loglik_at_hat = 0.0;
  int loglik_calls = 0;  // Fisher phase: L9 candidates plus line-search trials
  int grad_calls = 0;    // every grad_and_fisher call, including the final one
  int nm_calls = 0;      // likelihood calls made by the fallback
  int fisher_phase_grad_calls = 0;
  bool used_fallback = false;
  Termination termination = Termination::GradientTol;
  std::vector<TracePoint> iterate_trace;

  int total_loglik_calls() const noexcept { return loglik_calls + nm_calls; }
};

/// Rows of the L9 orthogonal design; each coordinate mixes the bounds with
/// weights (1/2, 1/2), (5/6, 1/6) or (1/6, 5/6).
std::array<MaternParams, 9> l9_candidates(const MaternParams& lower, const MaternParams& upper);

struct InitialSelection {
  MaternParams theta0;
  double loglik = 0.0;
  std::size_t index = 0;
  int calls_used = 0;
};

/// Highest-likelihood candidate, lowest index on ties. Candidates whose
/// covariance cannot be factored are skipped; throws InitializationFailed if
/// none survive.
InitialSelection select_initial(const LikelihoodModel& model, std::span<const MaternParams> candidates);

/// Solves I phi = grad. A singular or indefinite I is damped as
/// I + lambda diag(I), lambda = 1e-8, 2e-8, ... up to 100 (then SingularInformation).
Eigen::Vector3d fisher_step(const Eigen::Vector3d& grad, const Eigen::Matrix3d& fisher);

/// l_new >= l_old + c (grad . phi) - slack
bool armijo_relaxed(double l_new, double l_old, const Eigen::Vector3d& grad, const Eigen::Vector3d& phi,
                    const FisherBTConfig& cfg);

struct NelderMeadResult {
  MaternParams theta;
  double loglik = 0.0;
  int calls = 0;
  bool converged = false;
};

/// Downhill simplex maximization of the log-likelihood. Stops once the
/// simplex values span less than tol (or after max_evals calls) and returns
/// the best vertex seen.
NelderMeadResult nelder_mead(const LikelihoodModel& model, const MaternParams& theta0, double tol,
                             int max_evals = 5000);

OptResult fisher_bt(const LikelihoodModel& model, const FisherBTConfig& cfg);
OptResult fisher_bt(const SpatialDataset& data, const FisherBTConfig& cfg);

}  // namespace maternfit
