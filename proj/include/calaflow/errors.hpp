#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace calaflow {

/// Base class for all calaflow errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical state is invalid: convexity lost, Newton diverged, NaNs, ...
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The Hessian stopped being positive definite at a grid point.
class ConvexityLossError : public NumericalError {
 public:
  ConvexityLossError(const std::string& msg, std::array<double, 3> point)
      : NumericalError(msg), point(point) {}
  std::array<double, 3> point;
};

/// The curvature-norm sum came out structurally negative.
class FormulaAnomalyError : public NumericalError {
 public:
  FormulaAnomalyError(const std::string& msg, std::array<double, 3> point)
      : NumericalError(msg), point(point) {}
  std::array<double, 3> point;
};

/// Step size underflowed dt_min while retrying rejected steps.
class StiffnessFailureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Bad arguments, bad config files, schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system problems (missing input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace calaflow
