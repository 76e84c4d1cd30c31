#pragma once

#include <stdexcept>
#include <string>

namespace hamlearn {

/// Thrown when a caller violates an operation's preconditions
/// (dimension mismatch, out-of-range parameter, empty input).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces non-finite values or fails to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when reading or writing run artifacts fails.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace hamlearn
