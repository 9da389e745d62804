#include "maternfit/bessel.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "maternfit/errors.hpp"

namespace maternfit::bessel {

namespace {

using std::numbers::ln2;
using std::numbers::pi;

// Overflow for huge K_nu(x) (large nu, tiny x) is reported as +inf instead of throwing;
// the covariance code turns non-finite entries into a failed factorization.
using KPolicy = boost::math::policies::policy<boost::math::policies::overflow_error<
    boost::math::policies::ignore_error>>;

bool near_integer(double v) { return std::abs(v - std::round(v)) <= kIntegerBand; }

std::mutex g_handler_mutex;
WarningHandler g_handler;
std::atomic<long> g_warnings{0};

void warn(const std::string& message) {
  g_warnings.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard lock(g_handler_mutex);
  if (g_handler) g_handler(message);
}

// x^nu K_nu(x); used by the finite-difference fallback.
double xnu_knu(double nu, double x) { return std::pow(x, nu) * bessel_k(nu, x); }

double coeff_or_zero(const std::vector<double>& c, int j) {
  return (j >= 0 && j < static_cast<int>(c.size())) ? c[static_cast<std::size_t>(j)] : 0.0;
}

}  // namespace

const char* regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::ZeroArg: return "ZeroArg";
    case Regime::SmallX: return "SmallX";
    case Regime::MidX: return "MidX";
    case Regime::LargeX: return "LargeX";
    case Regime::FiniteDiff: return "FiniteDiff";
  }
  return "?";
}

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_handler_mutex);
  g_handler = std::move(handler);
}

long warning_count() noexcept { return g_warnings.load(std::memory_order_relaxed); }

double bessel_k(double nu, double x) {
  if (!std::isfinite(nu) || !std::isfinite(x)) throw DomainError("bessel_k: non-finite input");
  if (x <= 0.0) throw DomainError("bessel_k: argument must be positive");
  try {
    return boost::math::cyl_bessel_k(std::abs(nu), x, KPolicy());
  } catch (const std::runtime_error& e) {
    throw DomainError(std::string("bessel_k: evaluation failed: ") + e.what());
  }
}

double digamma(double x) {
  if (!std::isfinite(x)) throw DomainError("digamma: non-finite input");
  if (x <= 0.0 && x == std::floor(x)) throw DomainError("digamma: pole at non-positive integer");
  return boost::math::digamma(x);
}

Regime select_regime(double nu, double x) {
  if (x == 0.0) return Regime::ZeroArg;
  if (x < kSmallXLimit && !near_integer(nu)) return Regime::SmallX;
  if (x >= kSmallXLimit && x < kLargeXLimit) return Regime::MidX;
  if (x >= kLargeXLimit && !near_integer(nu + 0.5)) return Regime::LargeX;
  return Regime::FiniteDiff;
}

double dnu_xnu_knu(double nu, double x) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("dnu_xnu_knu: order must be positive");
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("dnu_xnu_knu: argument must be non-negative");
  switch (select_regime(nu, x)) {
    case Regime::ZeroArg: return 0.0;
    case Regime::SmallX: return case2_series(nu, x);
    case Regime::MidX: return case3_series(nu, x);
    case Regime::LargeX: return case4_series(nu, x);
    case Regime::FiniteDiff: break;
  }
  return (xnu_knu(nu + kFiniteDiffLag, x) - xnu_knu(nu, x)) / kFiniteDiffLag;
}

double case2_series(double nu, double x) {
  if (!(x > 0.0 && x < kSmallXLimit) || !std::isfinite(nu) || near_integer(nu))
    throw DomainError("case2_series: requires 0 < x < 8.5 and nu away from integers");

  const double gamma_nu = std::tgamma(nu);
  // Gamma(-nu) and psi(-nu) by reflection.
  const double sin_pi_nu = std::sin(pi * nu);
  const double gamma_neg = -pi / (nu * sin_pi_nu * gamma_nu);
  const double psi_nu = digamma(nu);
  const double psi_neg = psi_nu + 1.0 / nu + pi * std::cos(pi * nu) / sin_pi_nu;
  const double log_x = std::log(x);

  const double lead_neg = std::exp2(nu) * gamma_nu;
  const double lead_pos = std::exp2(-nu) * std::pow(x, 2.0 * nu) * gamma_neg;
  const double quarter_x2 = 0.25 * x * x;

  double weight = 0.5;  // (x/2)^{2k} / (2 k!)
  double g_neg = 1.0, d_neg = 0.0;  // g_k(-nu), d_k(-nu)
  double g_pos = 1.0, d_pos = 0.0;  // g_k(nu),  d_k(nu)
  double sum = 0.0;
  for (int k = 0; k <= kSmallXTerms; ++k) {
    if (k > 0) {
      weight *= quarter_x2 / k;
      const double inv_neg = 1.0 / (k - nu);
      const double inv_pos = 1.0 / (k + nu);
      g_neg *= inv_neg;
      d_neg -= inv_neg;
      g_pos *= inv_pos;
      d_pos -= inv_pos;
    }
    sum += weight * (lead_neg * (ln2 + psi_nu - d_neg) * g_neg +
                     lead_pos * (-ln2 + 2.0 * log_x - psi_neg + d_pos) * g_pos);
  }
  return sum;
}

std::vector<std::vector<double>> u_poly_coeffs(int k_max) {
  std::vector<std::vector<double>> table;
  if (k_max < 0) return table;
  table.reserve(static_cast<std::size_t>(k_max) + 1);
  table.push_back({1.0});
  for (int k = 0; k < k_max; ++k) {
    const auto& prev = table.back();
    std::vector<double> next(static_cast<std::size_t>(3 * (k + 1) + 1), 0.0);
    auto c = [&](int j) { return coeff_or_zero(prev, j); };
    next[0] = 0.0;
    next[1] = c(0) / 8.0;
    next[2] = 9.0 * c(1) / 16.0;
    next[3] = 25.0 * c(2) / 24.0 - 5.0 * c(0) / 24.0;
    for (int j = 4; j <= 3 * k + 1; ++j) {
      next[static_cast<std::size_t>(j)] = 0.5 * (j - 1 + 1.0 / (4.0 * j)) * c(j - 1) -
                                          0.5 * (j - 3 + 5.0 / (4.0 * j)) * c(j - 3);
    }
    // Top two coefficients; for k = 0 these indices are the explicit j = 2, 3 above.
    for (int j = std::max(4, 3 * k + 2); j <= 3 * k + 3; ++j) {
      next[static_cast<std::size_t>(j)] = -0.5 * (j - 3 + 5.0 / (4.0 * j)) * c(j - 3);
    }
    table.push_back(std::move(next));
  }
  return table;
}

const std::vector<std::vector<double>>& cached_u_coeffs() {
  static const std::vector<std::vector<double>> table = u_poly_coeffs(kMidXTermsNear);
  return table;
}

double case3_series(double nu, double x) {
  if (!(x >= kSmallXLimit && x < kLargeXLimit) || !(nu > 0.0) || !std::isfinite(nu))
    throw DomainError("case3_series: requires 8.5 <= x < 30 and nu > 0");
  if (nu < kMidXSmallOrder) {
    warn("uniform expansion used with small order nu=" + std::to_string(nu) +
         " at x=" + std::to_string(x));
  }

  const auto& table = cached_u_coeffs();
  const int terms = x < kMidXTruncationSwitch ? kMidXTermsNear : kMidXTermsFar;

  const double z = x / nu;
  const double one_z2 = 1.0 + z * z;
  const double s = std::sqrt(one_z2);
  const double eta = s + std::log(z / (1.0 + s));
  const double p = 1.0 / s;
  const double g = std::exp(nu * std::log(x) + 0.5 * std::log(pi / (2.0 * nu)) - nu * eta -
                            0.25 * std::log(one_z2));

  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double nu_pow = 1.0;  // nu^{-k}
  for (int k = 0; k <= terms; ++k) {
    const auto& c = table[static_cast<std::size_t>(k)];
    double u = 0.0, du = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) {
      u = u * p + c[j];
      if (j > 0) du = du * p + static_cast<double>(j) * c[j];
    }
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * nu_pow * u;
    s1 += sign * k * nu_pow / nu * u;
    s2 += sign * nu_pow * du;
    nu_pow /= nu;
  }

  const double bracket = std::log(nu) + std::log1p(s) - 1.0 / (2.0 * nu * one_z2);
  const double dp_dnu = x * x / (nu * nu * nu) * std::pow(one_z2, -1.5);
  return bracket * g * s0 - g * s1 + dp_dnu * g * s2;
}

std::vector<double> large_x_a_coeffs(double nu, int k_max) {
  std::vector<double> a(static_cast<std::size_t>(std::max(k_max, 0)) + 1, 1.0);
  for (int k = 1; k <= k_max; ++k) {
    const double odd = 2.0 * k - 1.0;
    a[static_cast<std::size_t>(k)] =
        a[static_cast<std::size_t>(k) - 1] * (4.0 * nu * nu - odd * odd) / (8.0 * k);
  }
  return a;
}

double case4_series(double nu, double x) {
  if (!(x >= kLargeXLimit) || !std::isfinite(x) || !std::isfinite(nu) || near_integer(nu + 0.5))
    throw DomainError("case4_series: requires x >= 30 and nu + 1/2 away from integers");

  const double log_x = std::log(x);
  double a = 1.0;  // a_k(nu)
  double b = 0.0;  // b_k(nu)
  double x_pow = 1.0;
  double sum = log_x;
  for (int k = 1; k <= kLargeXTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double t = 4.0 * nu * nu - odd * odd;
    a *= t / (8.0 * k);
    b += 8.0 * nu / t;
    x_pow /= x;
    sum += x_pow * (log_x + b) * a;
  }
  return std::sqrt(pi / 2.0) * std::exp((nu - 0.5) * log_x - x) * sum;
}

}  // namespace maternfit::bessel
