#pragma once

#include <stdexcept>
#include <string>

namespace fbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: malformed values, broken invariants, bad configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical failure that depends on the model parameters rather than on
/// malformed input. Each subclass names one failure mode.
class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string& what)
      : Error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FBM_NUMERICAL_ERROR(Name)                                  \
  class Name : public NumericalError {                             \
   public:                                                         \
    explicit Name(const std::string& what) : NumericalError(#Name, what) {} \
  };

// 1 + a_ii / N < 0 for some row.
FBM_NUMERICAL_ERROR(NotStochastic)
// Exact enumeration would exceed its budget.
FBM_NUMERICAL_ERROR(TooLarge)
// |h_x(t)| fell below the configured guard.
FBM_NUMERICAL_ERROR(DegenerateDenominator)
// q_x is infinite and A(x, +-inf) could not be resolved.
FBM_NUMERICAL_ERROR(ExtensionUnavailable)
FBM_NUMERICAL_ERROR(NoConvergence)
// ODE step pushed the state off the simplex by more than the repair budget.
FBM_NUMERICAL_ERROR(SimplexEscape)
FBM_NUMERICAL_ERROR(GridMismatch)

#undef FBM_NUMERICAL_ERROR

}  // namespace fbm
