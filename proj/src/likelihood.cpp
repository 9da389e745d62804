#include "maternfit/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "maternfit/errors.hpp"

namespace maternfit {

namespace {

constexpr Eigen::Index kBlock = 64;

struct Factorization {
  Eigen::MatrixXd lower;
  Eigen::VectorXd whitened;  // L^{-1} Z
  double quad_form = 0.0;    // Z^T Sigma^{-1} Z
  double loglik = 0.0;
};

Factorization factor_and_evaluate(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& z) {
  Factorization f;
  f.lower = cholesky_lower(sigma);
  const auto n = static_cast<double>(z.size());
  const double half_logdet = f.lower.diagonal().array().log().sum();
  f.whitened = f.lower.triangularView<Eigen::Lower>().solve(z);
  f.quad_form = f.whitened.squaredNorm();
  f.loglik = -0.5 * n * std::log(2.0 * std::numbers::pi) - half_logdet - 0.5 * f.quad_form;
  return f;
}

// Sigma^{-1} M by forward and back substitution against the Cholesky factor.
Eigen::MatrixXd solve_with_factor(const Eigen::MatrixXd& lower, Eigen::MatrixXd m) {
  lower.triangularView<Eigen::Lower>().solveInPlace(m);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(m);
  return m;
}

}  // namespace

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("cholesky_lower: matrix is not square");
  const Eigen::Index n = sigma.rows();
  Eigen::MatrixXd l = sigma.triangularView<Eigen::Lower>();

  for (Eigen::Index k = 0; k < n; k += kBlock) {
    const Eigen::Index b = std::min(kBlock, n - k);
    auto diag = l.block(k, k, b, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const double d = diag(j, j) - diag.row(j).head(j).squaredNorm();
      if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(static_cast<std::size_t>(k + j));
      const double root = std::sqrt(d);
      diag(j, j) = root;
      for (Eigen::Index i = j + 1; i < b; ++i) {
        diag(i, j) = (diag(i, j) - diag.row(i).head(j).dot(diag.row(j).head(j))) / root;
      }
    }
    const Eigen::Index rest = n - k - b;
    if (rest > 0) {
      auto panel = l.block(k + b, k, rest, b);
      diag.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(panel);
      l.block(k + b, k + b, rest, rest).selfadjointView<Eigen::Lower>().rankUpdate(panel, -1.0);
    }
  }
  l.triangularView<Eigen::StrictlyUpper>().setZero();
  return l;
}

double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("trace_product: matrices must be square with equal dimensions");
  return 0.5 * ((a + b.transpose()).squaredNorm() - a.squaredNorm() - b.squaredNorm());
}

GaussianLikelihood::GaussianLikelihood(SpatialDataset data)
    : data_(std::move(data)), table_(data_.locations) {
  data_.validate();
}

double GaussianLikelihood::log_likelihood(const MaternParams& theta) const {
  theta.validate();
  return factor_and_evaluate(build_cov_matrix(table_, theta), data_.values).loglik;
}

LikelihoodEval GaussianLikelihood::grad_and_fisher(const MaternParams& theta) const {
  theta.validate();
  const auto& z = data_.values;
  const auto n = static_cast<double>(z.size());
  const double s2 = theta.sigma2;

  // Step 1: log-likelihood; the factor is reused below.
  const Factorization f = factor_and_evaluate(build_cov_matrix(table_, theta), z);
  const Eigen::VectorXd w = f.lower.triangularView<Eigen::Lower>().transpose().solve(f.whitened);

  LikelihoodEval out;
  out.loglik = f.loglik;

  // Step 2: sigma2.
  out.grad[0] = (f.quad_form - n) / (2.0 * s2);
  out.fisher(0, 0) = n / (2.0 * s2 * s2);

  // Step 3: alpha.
  const Eigen::MatrixXd sigma_alpha = build_dcov_matrix(table_, theta, Param::Alpha);
  const Eigen::MatrixXd a_alpha = solve_with_factor(f.lower, sigma_alpha);
  const double tr_alpha = a_alpha.trace();
  out.fisher(0, 1) = out.fisher(1, 0) = tr_alpha / (2.0 * s2);
  out.grad[1] = -0.5 * tr_alpha + 0.5 * w.dot(sigma_alpha * w);
  out.fisher(1, 1) = 0.5 * trace_product(a_alpha, a_alpha);

  // Step 4: nu.
  const Eigen::MatrixXd sigma_nu = build_dcov_matrix(table_, theta, Param::Nu);
  const Eigen::MatrixXd a_nu = solve_with_factor(f.lower, sigma_nu);
  const double tr_nu = a_nu.trace();
  out.fisher(0, 2) = out.fisher(2, 0) = tr_nu / (2.0 * s2);
  out.grad[2] = -0.5 * tr_nu + 0.5 * w.dot(sigma_nu * w);
  out.fisher(1, 2) = out.fisher(2, 1) = 0.5 * trace_product(a_alpha, a_nu);
  out.fisher(2, 2) = 0.5 * trace_product(a_nu, a_nu);
  return out;
}

double log_likelihood(const SpatialDataset& data, const MaternParams& theta) {
  return GaussianLikelihood(data).log_likelihood(theta);
}

LikelihoodEval grad_and_fisher(const SpatialDataset& data, const MaternParams& theta) {
  return GaussianLikelihood(data).grad_and_fisher(theta);
}

}  // namespace maternfit
