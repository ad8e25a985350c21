#pragma once

#include <stdexcept>
#include <string>

namespace locrb {

/// Malformed or inconsistent problem configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A parameter vector outside the admissible box or of the wrong length.
class ParameterError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The requested field has no affine parameter decomposition.
class NotAffineError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Linear solver breakdown or an unmet residual check.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative algorithm hit its iteration/dimension cap.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace locrb
