#pragma once

#include <stdexcept>
#include <string>

namespace qslsp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid grid, config file or problem parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The computational box is too small for the requested field.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// An iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual = 0.0, int iterations = 0)
      : Error(what), last_residual_(last_residual), iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// The auxiliary fixed-point map stopped contracting.
class ContractionError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The tangent-frame Gram matrix is numerically singular.
class FrameError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace qslsp
