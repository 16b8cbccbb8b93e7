#pragma once

#include <stdexcept>
#include <string>

namespace ppds {

/// Shape or wiring mismatch between operators, grids, and variables.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the mathematical domain of an operation
/// (nonpositive stepsize, metric that is not positive definite, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A dense representation would exceed the configured memory cap.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A designer or decomposition hit a zero denominator / zero spectrum.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterate became non-finite. Carries the iteration count and the
/// offending variable ("x" or "z" plus block index).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, long iteration, char side, int block)
      : std::runtime_error(msg), iteration(iteration), side(side), block(block) {}
  long iteration;
  char side;  // 'x' primal, 'z' dual
  int block;
};

/// Every long-run candidate for the reference solution was infeasible.
class OracleFailureError : public std::runtime_error {
 public:
  explicit OracleFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed experiment configuration. Carries a line number when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line(line) {}
  int line;
};

}  // namespace ppds
