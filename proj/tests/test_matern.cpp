#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "maternfit/matern.hpp"
#include "support/oracles.hpp"

using namespace maternfit;
using doctest::Approx;

namespace {

double fd_param(double h, MaternParams theta, Param which, double step) {
  auto g = [&](double v) {
    MaternParams t = theta;
    if (which == Param::Sigma2) t.sigma2 = v;
    if (which == Param::Alpha) t.alpha = v;
    if (which == Param::Nu) t.nu = v;
    return matern_cov(h, t);
  };
  const double at = which == Param::Sigma2 ? theta.sigma2 : which == Param::Alpha ? theta.alpha : theta.nu;
  return oracle::richardson(g, at, step);
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK(MaternParams{1, 0.1, 0.5}.valid());
  CHECK_FALSE(MaternParams{0, 0.1, 0.5}.valid());
  CHECK_FALSE(MaternParams{1, -0.1, 0.5}.valid());
  CHECK_FALSE(MaternParams{1, 0.1, NAN}.valid());
  CHECK_THROWS_AS(MaternParams({1, 0.1, 0.0}).validate(), std::invalid_argument);

  SpatialDataset ok{{{0, 0}, {1, 0}}, Eigen::Vector2d(0.5, -0.5)};
  CHECK_NOTHROW(ok.validate());
  SpatialDataset dup{{{0, 0}, {0, 0}}, Eigen::Vector2d(0.5, -0.5)};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  SpatialDataset mismatch{{{0, 0}, {1, 0}}, Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(mismatch.validate(), std::invalid_argument);
  CHECK_THROWS_AS(SpatialDataset{}.validate(), std::invalid_argument);
}

TEST_CASE("matern_cov examples") {
  CHECK(matern_cov(0.0, {3.7, 0.2, 1.1}) == 3.7);
  CHECK(matern_cov(0.1, {1.0, 0.1, 0.5}) == Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(matern_cov(1.0, {2.0, 1.0, 1.5}) == Approx(4.0 * std::exp(-1.0)).epsilon(1e-13));
}

TEST_CASE("closed forms at nu = 1/2 and 3/2 to 1e-10") {
  const MaternParams half{1.3, 0.4, 0.5}, three_half{0.7, 0.25, 1.5};
  for (int i = 1; i <= 500; ++i) {
    const double h = 0.01 * i;
    const double r1 = h / half.alpha, r3 = h / three_half.alpha;
    CHECK(oracle::rel_err(matern_cov(h, half), half.sigma2 * std::exp(-r1)) <= 1e-10);
    CHECK(oracle::rel_err(matern_cov(h, three_half), three_half.sigma2 * (1 + r3) * std::exp(-r3)) <=
          1e-10);
  }
}

TEST_CASE("matern_cov is bounded and nonincreasing in h") {
  for (const MaternParams theta :
       {MaternParams{1, 0.1, 0.5}, MaternParams{2, 0.8, 1.0}, MaternParams{0.1, 0.1, 0.1},
        MaternParams{1.5, 1.55, 1.3}, MaternParams{0.05, 0.05, 0.05}, MaternParams{1, 0.3, 2.7}}) {
    double prev = matern_cov(0.0, theta);
    CHECK(prev == theta.sigma2);
    for (int i = 1; i <= 500; ++i) {
      const double c = matern_cov(0.01 * i, theta);
      REQUIRE(c <= prev);
      REQUIRE(c >= 0.0);
      REQUIRE(c <= theta.sigma2);
      prev = c;
    }
  }
}

TEST_CASE("derivative examples") {
  CHECK(dcov_dsigma2(0.0, {2, 3, 4}) == 1.0);
  CHECK(dcov_dsigma2(0.1, {1, 0.1, 0.5}) == Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(dcov_dsigma2(0.35, {1.7, 0.2, 0.8}) == Approx(matern_cov(0.35, {1.7, 0.2, 0.8}) / 1.7));

  CHECK(dcov_dalpha(0.0, {2, 3, 4}) == 0.0);
  CHECK(dcov_dalpha(0.1, {1, 0.1, 0.5}) == Approx(10.0 * std::exp(-1.0)).epsilon(1e-12));
  const MaternParams ta{1.0, 0.3, 1.2};
  CHECK(oracle::rel_err(dcov_dalpha(0.7, ta), fd_param(0.7, ta, Param::Alpha, 1e-6 * 0.3)) <= 1e-6);

  CHECK(dcov_dnu(0.0, {2, 3, 4}) == 0.0);
  const MaternParams tn{1.0, 0.5, 0.75};
  CHECK(oracle::rel_err(dcov_dnu(0.5, tn), fd_param(0.5, tn, Param::Nu, 1e-5)) <= 1e-6);
  CHECK(dcov_dnu(0.2, {2.0, 0.1, 0.5}) == Approx(2.0 * dcov_dnu(0.2, {1.0, 0.1, 0.5})).epsilon(1e-14));
}

TEST_CASE("all three derivatives agree with Richardson differences away from h=0") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> us(0.1, 3.0), ua(0.05, 1.5), un(0.1, 2.4), uh(0.005, 3.0);
  for (int trial = 0; trial < 60; ++trial) {
    const MaternParams theta{us(rng), ua(rng), un(rng)};
    const double h = uh(rng);
    if (matern_cov(h, theta) < 1e-12 * theta.sigma2) continue;
    for (Param p : {Param::Sigma2, Param::Alpha, Param::Nu}) {
      const double scale = p == Param::Sigma2 ? theta.sigma2 : p == Param::Alpha ? theta.alpha : 1.0;
      const double want = fd_param(h, theta, p, 1e-4 * scale);
      CHECK_MESSAGE(oracle::mixed_err(dcov(h, theta, p), want) <= 1e-6,
                    "param " << static_cast<int>(p) << " h=" << h << " theta=" << theta.sigma2 << ","
                             << theta.alpha << "," << theta.nu);
    }
  }
}

TEST_CASE("covariance matrix assembly") {
  const MaternParams theta{1.0, 0.1, 0.5};
  const std::vector<Point> one{{0.3, 0.4}};
  const auto m1 = build_cov_matrix(one, theta);
  REQUIRE(m1.rows() == 1);
  CHECK(m1(0, 0) == 1.0);

  const std::vector<Point> two{{0.0, 0.0}, {0.1, 0.0}};
  const auto m2 = build_cov_matrix(two, theta);
  CHECK(m2(0, 0) == 1.0);
  CHECK(m2(1, 1) == 1.0);
  CHECK(m2(0, 1) == Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(m2(1, 0) == m2(0, 1));

  const std::vector<Point> line{{0, 0}, {0.25, 0}, {0.5, 0}, {0.75, 0}};
  const auto t = build_cov_matrix(line, {2.0, 0.3, 1.2});
  for (int i = 0; i + 1 < 4; ++i)
    for (int j = 0; j + 1 < 4; ++j) CHECK(t(i + 1, j + 1) == Approx(t(i, j)).epsilon(1e-15));

  const auto dalpha1 = build_dcov_matrix(one, theta, Param::Alpha);
  CHECK(dalpha1(0, 0) == 0.0);
}

TEST_CASE("matrix invariants on random locations") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(40);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const MaternParams theta{1.4, 0.2, 0.9};
  const DistanceTable table(pts);
  const auto sigma = build_cov_matrix(table, theta);
  CHECK(sigma == sigma.transpose());
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    CHECK(sigma(i, i) == theta.sigma2);
    for (Eigen::Index j = 0; j < i; ++j) {
      CHECK(sigma(i, j) > 0.0);
      CHECK(sigma(i, j) < theta.sigma2);
      CHECK(table.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
            std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    }
  }

  const auto ds2 = build_dcov_matrix(table, theta, Param::Sigma2);
  CHECK(ds2 == sigma / theta.sigma2);

  const auto dnu = build_dcov_matrix(table, theta, Param::Nu);
  const auto dal = build_dcov_matrix(table, theta, Param::Alpha);
  CHECK(dnu == dnu.transpose());
  CHECK(dnu.diagonal().isZero(0.0));
  CHECK(dal.diagonal().isZero(0.0));

  const double step = 1e-5;
  auto with_nu = [&](double nu) { return build_cov_matrix(table, {theta.sigma2, theta.alpha, nu}); };
  const Eigen::MatrixXd fd = (4.0 * (with_nu(theta.nu + step / 2) - with_nu(theta.nu - step / 2)) / step -
                              (with_nu(theta.nu + step) - with_nu(theta.nu - step)) / (2 * step)) /
                             3.0;
  CHECK((dnu - fd).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("distance table deduplicates grid lags") {
  std::vector<Point> grid;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) grid.push_back({i / 9.0, j / 9.0});
  const DistanceTable table(grid);
  CHECK(table.size() == 100);
  CHECK(table.lags().size() < 4950 / 10);
  CHECK(std::is_sorted(table.lags().begin(), table.lags().end()));
}
