#pragma once

// Modified Bessel function of the second kind and the order derivative
// d/dnu [x^nu K_nu(x)] used by the Matern smoothness gradient.
//
// The derivative is evaluated by one of four series, chosen from (nu, x):
//
//   x == 0                                  -> exactly 0
//   0 < x < 8.5, nu not near an integer     -> ascending series (21 terms)
//   8.5 <= x < 30                           -> uniform asymptotic expansion in nu
//   x >= 30, nu + 1/2 not near an integer   -> large-argument expansion (6 terms)
//   anything else                           -> forward difference, lag 1e-9
//
// "Near" means within 1e-6 of the nearest integer.

#include <functional>
#include <string_view>
#include <vector>

namespace maternfit::bessel {

enum class Regime { ZeroArg, SmallX, MidX, LargeX, FiniteDiff };

inline constexpr double kSmallXLimit = 8.5;
inline constexpr double kLargeXLimit = 30.0;
inline constexpr double kMidXTruncationSwitch = 15.0;
inline constexpr double kIntegerBand = 1e-6;
inline constexpr double kFiniteDiffLag = 1e-9;
inline constexpr int kSmallXTerms = 20;    // k = 0..20
inline constexpr int kMidXTermsNear = 12;  // 8.5 <= x < 15
inline constexpr int kMidXTermsFar = 8;    // 15 <= x < 30
inline constexpr int kLargeXTerms = 5;     // k = 0..5
// Orders below this are outside the comfortable range of the uniform expansion.
inline constexpr double kMidXSmallOrder = 0.05;

const char* regime_name(Regime r) noexcept;

/// K_nu(x) for real nu (K_{-nu} = K_nu) and x > 0.
double bessel_k(double nu, double x);

/// psi(x) = Gamma'(x) / Gamma(x). Throws DomainError at 0, -1, -2, ...
double digamma(double x);

Regime select_regime(double nu, double x);

/// d/dnu [x^nu K_nu(x)] for nu > 0, x >= 0.
double dnu_xnu_knu(double nu, double x);

double case2_series(double nu, double x);
double case3_series(double nu, double x);
double case4_series(double nu, double x);

/// a_0(nu) .. a_{k_max}(nu) of the large-argument expansion
/// K_nu(x) ~ sqrt(pi / 2x) e^{-x} sum_k a_k(nu) x^{-k}.
std::vector<double> large_x_a_coeffs(double nu, int k_max);

/// Coefficients c^{(k)}_j of U_k(p) = sum_j c_j p^j for k = 0..k_max.
/// Row k has 3k + 1 entries.
std::vector<std::vector<double>> u_poly_coeffs(int k_max);

/// Table for k = 0..12, computed once.
const std::vector<std::vector<double>>& cached_u_coeffs();

// Diagnostics (currently only: uniform expansion used with nu < 0.05).
// The handler must be thread-safe; it may be called from concurrent evaluations.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
long warning_count() noexcept;

}  // namespace maternfit::bessel
