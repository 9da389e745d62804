#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maternfit {

// Invalid argument to a numerical routine (x <= 0 for K_nu, poles of digamma, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Cholesky factorization met a non-positive pivot. The pivot index is 0-based.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : std::runtime_error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// Every starting candidate failed to produce a finite log-likelihood.
class InitializationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Fisher information could not be inverted even after damping.
class SingularInformation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid simulation plan (for example a non-square n on a grid).
class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace maternfit
