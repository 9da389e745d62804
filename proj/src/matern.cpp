#include "maternfit/matern.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "maternfit/bessel.hpp"

namespace maternfit {

namespace {

// 2^{1-nu} / Gamma(nu) * (h/alpha)^nu, computed in logs so large nu does not overflow early.
double scaled_power(double x, double nu) {
  return std::exp((1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(x));
}

template <typename F>
Eigen::MatrixXd assemble(const DistanceTable& table, double diagonal, F&& entry) {
  const auto n = table.size();
  std::vector<double> per_lag(table.lags().size());
  std::transform(table.lags().begin(), table.lags().end(), per_lag.begin(), entry);

  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    m(jj, jj) = diagonal;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double v = per_lag[table.lag_index(i, j)];
      m(static_cast<Eigen::Index>(i), jj) = v;
      m(jj, static_cast<Eigen::Index>(i)) = v;
    }
  }
  return m;
}

}  // namespace

bool MaternParams::valid() const noexcept {
  return std::isfinite(sigma2) && std::isfinite(alpha) && std::isfinite(nu) && sigma2 > 0.0 &&
         alpha > 0.0 && nu > 0.0;
}

void MaternParams::validate() const {
  if (!valid()) {
    throw std::invalid_argument("Matern parameters must be finite and positive (sigma2=" +
                                std::to_string(sigma2) + ", alpha=" + std::to_string(alpha) +
                                ", nu=" + std::to_string(nu) + ")");
  }
}

void SpatialDataset::validate() const {
  if (locations.empty()) throw std::invalid_argument("dataset is empty");
  if (static_cast<std::size_t>(values.size()) != locations.size())
    throw std::invalid_argument("dataset has " + std::to_string(locations.size()) +
                                " locations but " + std::to_string(values.size()) + " values");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i].x) || !std::isfinite(locations[i].y) ||
        !std::isfinite(values[static_cast<Eigen::Index>(i)]))
      throw std::invalid_argument("dataset row " + std::to_string(i) + " is not finite");
  }
  std::vector<Point> sorted = locations;
  std::sort(sorted.begin(), sorted.end(),
            [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("dataset contains duplicate locations");
}

double matern_cov(double h, const MaternParams& theta) {
  if (h == 0.0) return theta.sigma2;
  const double x = h / theta.alpha;
  return theta.sigma2 * scaled_power(x, theta.nu) * bessel::bessel_k(theta.nu, x);
}

double dcov_dsigma2(double h, const MaternParams& theta) {
  if (h == 0.0) return 1.0;
  return matern_cov(h, theta) / theta.sigma2;
}

double dcov_dalpha(double h, const MaternParams& theta) {
  if (h == 0.0) return 0.0;
  const double x = h / theta.alpha;
  return theta.sigma2 / theta.alpha * x * scaled_power(x, theta.nu) *
         bessel::bessel_k(theta.nu - 1.0, x);
}

double dcov_dnu(double h, const MaternParams& theta) {
  if (h == 0.0) return 0.0;
  const double x = h / theta.alpha;
  const double nu = theta.nu;
  const double q = std::exp((1.0 - nu) * std::numbers::ln2 - std::lgamma(nu));  // 2^{1-nu}/Gamma(nu)
  const double qf = scaled_power(x, nu) * bessel::bessel_k(nu, x);
  return theta.sigma2 * ((-std::numbers::ln2 - bessel::digamma(nu)) * qf +
                         q * bessel::dnu_xnu_knu(nu, x));
}

double dcov(double h, const MaternParams& theta, Param which) {
  switch (which) {
    case Param::Sigma2: return dcov_dsigma2(h, theta);
    case Param::Alpha: return dcov_dalpha(h, theta);
    case Param::Nu: return dcov_dnu(h, theta);
  }
  throw std::invalid_argument("unknown parameter");
}

DistanceTable::DistanceTable(std::span<const Point> locations) : n_(locations.size()) {
  const std::size_t pairs = n_ < 2 ? 0 : n_ * (n_ - 1) / 2;
  std::vector<double> dist(pairs);
  for (std::size_t i = 1, k = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j, ++k) {
      dist[k] = std::hypot(locations[i].x - locations[j].x, locations[i].y - locations[j].y);
    }
  }
  std::vector<std::size_t> order(pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  pair_lag_.resize(pairs);
  for (std::size_t idx : order) {
    if (lags_.empty() || lags_.back() != dist[idx]) lags_.push_back(dist[idx]);
    pair_lag_[idx] = lags_.size() - 1;
  }
}

double DistanceTable::distance(std::size_t i, std::size_t j) const noexcept {
  if (i == j) return 0.0;
  if (i < j) std::swap(i, j);
  return lags_[lag_index(i, j)];
}

Eigen::MatrixXd build_cov_matrix(const DistanceTable& table, const MaternParams& theta) {
  return assemble(table, theta.sigma2, [&](double h) { return matern_cov(h, theta); });
}

Eigen::MatrixXd build_cov_matrix(std::span<const Point> locations, const MaternParams& theta) {
  return build_cov_matrix(DistanceTable(locations), theta);
}

Eigen::MatrixXd build_dcov_matrix(const DistanceTable& table, const MaternParams& theta, Param which) {
  const double diagonal = which == Param::Sigma2 ? 1.0 : 0.0;
  return assemble(table, diagonal, [&](double h) { return dcov(h, theta, which); });
}

Eigen::MatrixXd build_dcov_matrix(std::span<const Point> locations, const MaternParams& theta,
                                  Param which) {
  return build_dcov_matrix(DistanceTable(locations), theta, which);
}

}  // namespace maternfit
