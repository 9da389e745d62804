#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "maternfit/matern.hpp"

namespace maternfit {

/// Seeded generator used for every simulated quantity. Built only from
/// operations whose output the C++ standard pins down (mt19937_64 and plain
/// arithmetic), so a seed reproduces the same draws on every platform.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64/u53/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller, both draws used).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Child seed for (master, i, j, ...): SplitMix64 applied to each index in turn.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

enum class LocationScheme { UnitGrid, UniformRandom };

struct SimulationPlan {
  std::size_t n = 400;
  MaternParams theta_true{1.0, 0.1, 0.5};
  std::size_t replicates = 1;
  LocationScheme location_scheme = LocationScheme::UnitGrid;
  std::uint64_t rng_seed = 0;
  Rect domain{};

  /// Throws PlanError.
  void validate() const;
};

/// UnitGrid: sqrt(n) x sqrt(n) grid including the domain corners, x-major.
/// UniformRandom: i.i.d. uniform points, redrawn while closer than 1e-9 to an earlier one.
std::vector<Point> gen_locations(const SimulationPlan& plan);

/// One draw of N(0, Sigma(theta)) as L u with L = cholesky_lower(Sigma).
Eigen::VectorXd simulate_grf(std::span<const Point> locations, const MaternParams& theta, std::uint64_t seed);

/// Replicate r uses seed derive_seed(plan.rng_seed, {1, r}); locations come
/// from derive_seed(plan.rng_seed, {0}) and are shared across replicates.
std::vector<SpatialDataset> simulate_replicates(const SimulationPlan& plan);

/// theta_m = sigma2 * alpha^(-2 nu)
double microergodic(const MaternParams& theta);

}  // namespace maternfit
