#pragma once

#include <stdexcept>
#include <string>

namespace stopsum {

/// Argument outside the mathematical domain of a primitive (non-finite x, empty sample, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid model parameters or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke an operation's usage contract (grid too short, t out of range, missing data).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A path hit the model's step cap before the stopping time was reached.
class PathOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The fractional correction fell outside (0, 1]; n is too small relative to the first variance.
class DegenerateStartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exact pathwise hypothesis check failed.
class ModelInvalidError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stopsum
