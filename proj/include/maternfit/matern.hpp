#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace maternfit {

/// Matern parameters theta = (sigma2, alpha, nu): variance, range, smoothness.
struct MaternParams {
  double sigma2 = 1.0;
  double alpha = 1.0;
  double nu = 0.5;

  bool valid() const noexcept;
  /// Throws std::invalid_argument unless all three are finite and positive.
  void validate() const;

  Eigen::Vector3d vec() const { return {sigma2, alpha, nu}; }
  static MaternParams from_vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

  friend bool operator==(const MaternParams&, const MaternParams&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Observations Z(s_1), ..., Z(s_n) at planar locations.
struct SpatialDataset {
  std::vector<Point> locations;
  Eigen::VectorXd values;

  std::size_t size() const noexcept { return locations.size(); }
  /// n >= 1, matching lengths, finite values, pairwise distinct locations.
  void validate() const;
};

enum class Param { Sigma2 = 0, Alpha = 1, Nu = 2 };

/// C(h; theta) = sigma2 / (2^{nu-1} Gamma(nu)) (h/alpha)^nu K_nu(h/alpha); C(0) = sigma2.
double matern_cov(double h, const MaternParams& theta);
double dcov_dsigma2(double h, const MaternParams& theta);
double dcov_dalpha(double h, const MaternParams& theta);
double dcov_dnu(double h, const MaternParams& theta);
double dcov(double h, const MaternParams& theta, Param which);

/// Pairwise Euclidean distances, stored once per unordered pair and
/// deduplicated so each distinct lag is evaluated only once per matrix.
class DistanceTable {
 public:
  explicit DistanceTable(std::span<const Point> locations);

  std::size_t size() const noexcept { return n_; }
  /// Distinct positive distances, ascending.
  const std::vector<double>& lags() const noexcept { return lags_; }
  /// Index into lags() for the pair (i, j), i > j.
  std::size_t lag_index(std::size_t i, std::size_t j) const noexcept {
    return pair_lag_[i * (i - 1) / 2 + j];
  }
  double distance(std::size_t i, std::size_t j) const noexcept;

 private:
  std::size_t n_ = 0;
  std::vector<double> lags_;
  std::vector<std::size_t> pair_lag_;
};

Eigen::MatrixXd build_cov_matrix(const DistanceTable& table, const MaternParams& theta);
Eigen::MatrixXd build_cov_matrix(std::span<const Point> locations, const MaternParams& theta);

Eigen::MatrixXd build_dcov_matrix(const DistanceTable& table, const MaternParams& theta, Param which);
Eigen::MatrixXd build_dcov_matrix(std::span<const Point> locations, const MaternParams& theta,
                                  Param which);

}  // namespace maternfit
