#pragma once

#include <stdexcept>
#include <string>

namespace dhlab {

// Rejected input: sizes, ranges, malformed text.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration files that parse but fail validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical faults: non-convergence, invariant violations beyond tolerance.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dhlab
