#pragma once

#include <Eigen/Core>

#include "maternfit/matern.hpp"

namespace maternfit {

/// Log-likelihood with its gradient and expected (Fisher) information,
/// ordered (sigma2, alpha, nu).
struct LikelihoodEval {
  double loglik = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d fisher = Eigen::Matrix3d::Zero();
};

/// Lower Cholesky factor of a symmetric matrix; only the lower triangle is read.
/// Throws NotPositiveDefinite with the failing (0-based) pivot.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma);

/// trace(AB) through ||A + B^T||_F^2 - ||A||_F^2 - ||B||_F^2, O(n^2).
double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Anything the optimizers can maximize: a log-likelihood with score and
/// expected information. Implementations throw NotPositiveDefinite (or
/// DomainError) where the objective is undefined.
class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;
  virtual double log_likelihood(const MaternParams& theta) const = 0;
  virtual LikelihoodEval grad_and_fisher(const MaternParams& theta) const = 0;
};

/// Exact zero-mean Gaussian log-likelihood for one dataset. Holds the
/// pairwise distance table so repeated evaluations only redo the Bessel
/// work for distinct lags.
class GaussianLikelihood final : public LikelihoodModel {
 public:
  explicit GaussianLikelihood(SpatialDataset data);

  const SpatialDataset& data() const noexcept { return data_; }
  const DistanceTable& distances() const noexcept { return table_; }
  std::size_t size() const noexcept { return data_.size(); }

  double log_likelihood(const MaternParams& theta) const override;
  LikelihoodEval grad_and_fisher(const MaternParams& theta) const override;

 private:
  SpatialDataset data_;
  DistanceTable table_;
};

double log_likelihood(const SpatialDataset& data, const MaternParams& theta);
LikelihoodEval grad_and_fisher(const SpatialDataset& data, const MaternParams& theta);

}  // namespace maternfit
