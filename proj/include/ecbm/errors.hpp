#pragma once

#include <stdexcept>
#include <string>

namespace ecbm {

// Invalid configuration or malformed input. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Numerical failure. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// An inverse-curvature operator was applied to parameters it was not built for.
class StaleOperatorError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ecbm
