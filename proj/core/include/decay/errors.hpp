#pragma once

#include <stdexcept>
#include <string>

namespace decay {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or missing configuration; the message names the offending key.
struct ConfigError : Error {
  using Error::Error;
};

/// A model failed an assembly-time structure check (skewness, PSD, ...).
struct ModelError : Error {
  using Error::Error;
};

/// A nonlinear stage solve or a linear solve did not converge.
struct SolverError : Error {
  using Error::Error;
};

/// Generic numerical failure (non-PSD Gramian, failed quadrature, ...).
struct NumericsError : Error {
  using Error::Error;
};

/// The psi integrand is singular: 1 - Lambda_H is below the guard threshold
/// somewhere on the integration range. Feedbacks with linear growth at zero
/// must use the exponential envelope instead.
struct SingularityError : NumericsError {
  using NumericsError::NumericsError;
};

/// A growth function failed its probe-grid validation.
struct InvalidGrowthError : Error {
  using Error::Error;
};

}  // namespace decay
