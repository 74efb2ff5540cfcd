#pragma once

#include <stdexcept>
#include <string>

namespace loconav {

/// Caller violated an operation's contract (bad dimensions, empty input...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked on a state it does not accept (e.g. pose inside a wall).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A* found no route between start and goal on the current map.
class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration key unknown or value outside its valid range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loconav
