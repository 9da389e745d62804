#include "maternfit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "maternfit/errors.hpp"

namespace maternfit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Weights on (lower, upper) for the three design levels.
struct Level {
  double lower, upper;
};
constexpr Level kMid{0.5, 0.5};
constexpr Level kLow{5.0 / 6.0, 1.0 / 6.0};
constexpr Level kHigh{1.0 / 6.0, 5.0 / 6.0};

constexpr std::array<std::array<Level, 3>, 9> kL9{{
    {kMid, kMid, kMid},
    {kMid, kLow, kLow},
    {kMid, kHigh, kHigh},
    {kLow, kMid, kLow},
    {kLow, kLow, kHigh},
    {kLow, kHigh, kMid},
    {kHigh, kMid, kHigh},
    {kHigh, kLow, kMid},
    {kHigh, kHigh, kLow},
}};

bool positive(const Eigen::Vector3d& v) { return (v.array() > 0.0).all() && v.allFinite(); }

// log-likelihood, or -inf where the covariance cannot be factored.
double try_loglik(const LikelihoodModel& model, const Eigen::Vector3d& v) {
  try {
    const double l = model.log_likelihood(MaternParams::from_vec(v));
    return std::isfinite(l) ? l : kNegInf;
  } catch (const NotPositiveDefinite&) {
    return kNegInf;
  } catch (const DomainError&) {
    return kNegInf;
  }
}

void check_positive(const MaternParams& p, const char* what) {
  if (!p.valid()) throw std::invalid_argument(std::string(what) + " must be finite and positive");
}

}  // namespace

void FisherBTConfig::validate() const {
  check_positive(theta_lower, "theta_lower");
  check_positive(theta_upper, "theta_upper");
  if (!(theta_lower.sigma2 < theta_upper.sigma2 && theta_lower.alpha < theta_upper.alpha &&
        theta_lower.nu < theta_upper.nu))
    throw std::invalid_argument("theta_lower must be componentwise below theta_upper");
  if (!(armijo_c > 0 && armijo_slack > 0 && grad_tol > 0 && nm_tol > 0))
    throw std::invalid_argument("tolerances must be positive");
  if (!(backtrack_rho > 0 && backtrack_rho < 1)) throw std::invalid_argument("backtrack_rho must lie in (0, 1)");
  if (max_loglik_calls < 1 || max_grad_calls < 0 || max_halvings < 1 || nm_max_evals < 4)
    throw std::invalid_argument("call budgets are too small");
}

const char* termination_name(Termination t) noexcept {
  switch (t) {
    case Termination::GradientTol: return "GradientTol";
    case Termination::FallbackConverged: return "FallbackConverged";
    case Termination::BudgetExhausted: return "BudgetExhausted";
  }
  return "?";
}

std::array<MaternParams, 9> l9_candidates(const MaternParams& lower, const MaternParams& upper) {
  std::array<MaternParams, 9> out;
  const Eigen::Vector3d lo = lower.vec(), hi = upper.vec();
  for (std::size_t r = 0; r < kL9.size(); ++r) {
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) {
      const Level w = kL9[r][static_cast<std::size_t>(k)];
      v[k] = w.lower * lo[k] + w.upper * hi[k];
    }
    out[r] = MaternParams::from_vec(v);
  }
  return out;
}

InitialSelection select_initial(const LikelihoodModel& model, std::span<const MaternParams> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_initial: no candidates");
  InitialSelection best;
  best.loglik = kNegInf;
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ++best.calls_used;
    if (!candidates[i].valid()) continue;
    const double l = try_loglik(model, candidates[i].vec());
    if (l > best.loglik) {
      best.loglik = l;
      best.theta0 = candidates[i];
      best.index = i;
      found = true;
    }
  }
  if (!found) throw InitializationFailed("no starting candidate has a finite log-likelihood");
  return best;
}

Eigen::Vector3d fisher_step(const Eigen::Vector3d& grad, const Eigen::Matrix3d& fisher) {
  auto solve = [&](const Eigen::Matrix3d& m, Eigen::Vector3d& out) {
    if (!m.allFinite()) return false;
    const Eigen::LLT<Eigen::Matrix3d> llt(m);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) return false;
    out = llt.solve(grad);
    return out.allFinite();
  };
  Eigen::Vector3d phi;
  if (solve(fisher, phi)) return phi;
  const Eigen::Matrix3d diag = fisher.diagonal().asDiagonal();
  for (double lambda = 1e-8; lambda <= 1e2; lambda *= 2.0) {
    if (solve(fisher + lambda * diag, phi)) return phi;
  }
  throw SingularInformation("Fisher information is singular even after damping");
}

bool armijo_relaxed(double l_new, double l_old, const Eigen::Vector3d& grad, const Eigen::Vector3d& phi,
                    const FisherBTConfig& cfg) {
  return l_new >= l_old + cfg.armijo_c * grad.dot(phi) - cfg.armijo_slack;
}

NelderMeadResult nelder_mead(const LikelihoodModel& model, const MaternParams& theta0, double tol,
                             int max_evals) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  NelderMeadResult res;
  auto f = [&](const Eigen::Vector3d& v) {
    ++res.calls;
    return try_loglik(model, v);
  };
  // Non-positive coordinates of a trial point are replaced by half the
  // corresponding coordinate of the point the move started from.
  auto keep_positive = [](Eigen::Vector3d v, const Eigen::Vector3d& base) {
    for (int k = 0; k < 3; ++k)
      if (!(v[k] > 0.0)) v[k] = 0.5 * base[k];
    return v;
  };

  std::array<Eigen::Vector3d, 4> x;
  std::array<double, 4> fx{};
  x[0] = theta0.vec();
  for (int k = 0; k < 3; ++k) {
    x[static_cast<std::size_t>(k) + 1] = x[0];
    x[static_cast<std::size_t>(k) + 1][k] += std::max(0.1 * x[0][k], 0.01);
  }
  for (std::size_t i = 0; i < 4; ++i) fx[i] = f(x[i]);

  std::array<std::size_t, 4> order{};
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] > fx[b]; });
    std::array<Eigen::Vector3d, 4> xs;
    std::array<double, 4> fs{};
    for (std::size_t i = 0; i < 4; ++i) {
      xs[i] = x[order[i]];
      fs[i] = fx[order[i]];
    }
    x = xs;
    fx = fs;
  };

  for (;;) {
    sort_simplex();
    if (fx[0] - fx[3] < tol) {
      res.converged = true;
      break;
    }
    if (res.calls >= max_evals) break;

    const Eigen::Vector3d centroid = (x[0] + x[1] + x[2]) / 3.0;
    const Eigen::Vector3d xr = keep_positive(centroid + kReflect * (centroid - x[3]), centroid);
    const double fr = f(xr);
    if (fr > fx[0]) {
      const Eigen::Vector3d xe = keep_positive(centroid + kExpand * (xr - centroid), xr);
      const double fe = f(xe);
      if (fe > fr) {
        x[3] = xe;
        fx[3] = fe;
      } else {
        x[3] = xr;
        fx[3] = fr;
      }
      continue;
    }
    if (fr > fx[2]) {
      x[3] = xr;
      fx[3] = fr;
      continue;
    }
    if (fr > fx[3]) {
      const Eigen::Vector3d xc = centroid + kContract * (xr - centroid);
      const double fc = f(xc);
      if (fc >= fr) {
        x[3] = xc;
        fx[3] = fc;
        continue;
      }
    } else {
      const Eigen::Vector3d xc = centroid + kContract * (x[3] - centroid);
      const double fc = f(xc);
      if (fc > fx[3]) {
        x[3] = xc;
        fx[3] = fc;
        continue;
      }
    }
    for (std::size_t i = 1; i < 4; ++i) {
      x[i] = x[0] + kShrink * (x[i] - x[0]);
      fx[i] = f(x[i]);
    }
  }

  sort_simplex();
  res.theta = MaternParams::from_vec(x[0]);
  res.loglik = fx[0];
  return res;
}

OptResult fisher_bt(const LikelihoodModel& model, const FisherBTConfig& cfg) {
  cfg.validate();
  OptResult out;

  const auto candidates = l9_candidates(cfg.theta_lower, cfg.theta_upper);
  const InitialSelection init = select_initial(model, candidates);
  out.loglik_calls = init.calls_used;

  Eigen::Vector3d theta = init.theta0.vec();
  double loglik = init.loglik;
  out.iterate_trace.push_back({init.theta0, loglik, TracePoint::Source::Initial, 0.0, 0});

  LikelihoodEval eval = model.grad_and_fisher(init.theta0);
  ++out.grad_calls;

  for (;;) {
    if (eval.grad.norm() <= cfg.grad_tol) break;
    if (out.loglik_calls > cfg.max_loglik_calls || out.grad_calls > cfg.max_grad_calls) {
      out.used_fallback = true;
      break;
    }
    Eigen::Vector3d phi;
    try {
      phi = fisher_step(eval.grad, eval.fisher);
    } catch (const SingularInformation&) {
      out.used_fallback = true;
      break;
    }

    bool accepted = false;
    int halvings = 0;
    double trial_loglik = kNegInf;
    for (;;) {
      const Eigen::Vector3d trial = theta + phi;
      // Steps leaving the positive octant fail the test without a likelihood call.
      if (positive(trial)) {
        ++out.loglik_calls;
        trial_loglik = try_loglik(model, trial);
        if (std::isfinite(trial_loglik) && armijo_relaxed(trial_loglik, loglik, eval.grad, phi, cfg)) {
          accepted = true;
          break;
        }
      }
      if (out.loglik_calls > cfg.max_loglik_calls || halvings >= cfg.max_halvings) break;
      phi *= cfg.backtrack_rho;
      ++halvings;
    }
    if (!accepted) {
      out.used_fallback = true;
      break;
    }

    const double gds = eval.grad.dot(phi);
    if (!(trial_loglik >= loglik + cfg.armijo_c * gds - cfg.armijo_slack))
      throw std::logic_error("accepted step violates the Armijo condition");
    theta += phi;
    loglik = trial_loglik;
    out.iterate_trace.push_back(
        {MaternParams::from_vec(theta), loglik, TracePoint::Source::FisherStep, gds, halvings});

    eval = model.grad_and_fisher(MaternParams::from_vec(theta));
    ++out.grad_calls;
  }
  out.fisher_phase_grad_calls = out.grad_calls;

  if (out.used_fallback) {
    const NelderMeadResult nm = nelder_mead(model, MaternParams::from_vec(theta), cfg.nm_tol, cfg.nm_max_evals);
    out.nm_calls = nm.calls;
    out.termination = nm.converged ? Termination::FallbackConverged : Termination::BudgetExhausted;
    out.iterate_trace.push_back({nm.theta, nm.loglik, TracePoint::Source::NelderMead, 0.0, 0});
    eval = model.grad_and_fisher(nm.theta);
    ++out.grad_calls;
    theta = nm.theta.vec();
  } else {
    out.termination = Termination::GradientTol;
  }

  out.theta_hat = MaternParams::from_vec(theta);
  out.loglik_at_hat = eval.loglik;
  out.grad_at_hat = eval.grad;
  out.fisher_at_hat = eval.fisher;
  return out;
}

OptResult fisher_bt(const SpatialDataset& data, const FisherBTConfig& cfg) {
  return fisher_bt(GaussianLikelihood(data), cfg);
}

}  // namespace maternfit
