#include "maternfit/simulate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "maternfit/errors.hpp"
#include "maternfit/likelihood.hpp"

namespace maternfit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t grid_side(std::size_t n) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  while (side * side > n) --side;
  while ((side + 1) * (side + 1) <= n) ++side;
  return side;
}

}  // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

void SimulationPlan::validate() const {
  if (n < 2) throw PlanError("sample size must be at least 2");
  if (replicates < 1) throw PlanError("at least one replicate is required");
  if (!theta_true.valid()) throw PlanError("true parameters must be finite and positive");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0) || !std::isfinite(domain.x0) ||
      !std::isfinite(domain.x1) || !std::isfinite(domain.y0) || !std::isfinite(domain.y1))
    throw PlanError("domain must be a non-degenerate finite rectangle");
  if (location_scheme == LocationScheme::UnitGrid) {
    const std::size_t side = grid_side(n);
    if (side * side != n) throw PlanError("grid layout needs a perfect-square n (got " + std::to_string(n) + ")");
  }
}

std::vector<Point> gen_locations(const SimulationPlan& plan) {
  plan.validate();
  const Rect& d = plan.domain;
  std::vector<Point> pts;
  pts.reserve(plan.n);
  if (plan.location_scheme == LocationScheme::UnitGrid) {
    const std::size_t side = grid_side(plan.n);
    const double dx = (d.x1 - d.x0) / static_cast<double>(side - 1);
    const double dy = (d.y1 - d.y0) / static_cast<double>(side - 1);
    for (std::size_t i = 0; i < side; ++i)
      for (std::size_t j = 0; j < side; ++j)
        pts.push_back({i + 1 == side ? d.x1 : d.x0 + static_cast<double>(i) * dx,
                       j + 1 == side ? d.y1 : d.y0 + static_cast<double>(j) * dy});
    return pts;
  }

  Rng rng(derive_seed(plan.rng_seed, {0}));
  while (pts.size() < plan.n) {
    const Point p{d.x0 + (d.x1 - d.x0) * rng.uniform(), d.y0 + (d.y1 - d.y0) * rng.uniform()};
    bool too_close = false;
    for (const Point& q : pts) {
      if (std::hypot(p.x - q.x, p.y - q.y) < 1e-9) {
        too_close = true;
        break;
      }
    }
    if (!too_close) pts.push_back(p);
  }
  return pts;
}

Eigen::VectorXd simulate_grf(std::span<const Point> locations, const MaternParams& theta, std::uint64_t seed) {
  theta.validate();
  const Eigen::MatrixXd lower = cholesky_lower(build_cov_matrix(locations, theta));
  Rng rng(seed);
  Eigen::VectorXd u(static_cast<Eigen::Index>(locations.size()));
  for (auto& v : u) v = rng.normal();
  return lower.triangularView<Eigen::Lower>() * u;
}

std::vector<SpatialDataset> simulate_replicates(const SimulationPlan& plan) {
  const std::vector<Point> locations = gen_locations(plan);
  const Eigen::MatrixXd lower = cholesky_lower(build_cov_matrix(locations, plan.theta_true));
  std::vector<SpatialDataset> out;
  out.reserve(plan.replicates);
  for (std::size_t r = 0; r < plan.replicates; ++r) {
    Rng rng(derive_seed(plan.rng_seed, {1, r}));
    Eigen::VectorXd u(static_cast<Eigen::Index>(locations.size()));
    for (auto& v : u) v = rng.normal();
    out.push_back({locations, lower.triangularView<Eigen::Lower>() * u});
  }
  return out;
}

double microergodic(const MaternParams& theta) {
  return theta.sigma2 * std::pow(theta.alpha, -2.0 * theta.nu);
}

}  // namespace maternfit
