#pragma once

#include <stdexcept>
#include <string>

namespace noisygap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inputs outside an operation's domain (negative beta, odd size, bad threshold, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed convergence, degenerate directions.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Eigendecomposition whose left/right modes are not bi-orthonormal within tolerance.
class NearDefectiveError : public NumericalError {
 public:
  NearDefectiveError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Invalid experiment or model configuration.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(field), message_(message) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

}  // namespace noisygap
