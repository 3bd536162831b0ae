#pragma once

#include <stdexcept>
#include <string>

namespace locc {

// Raised when caller-supplied data violates a documented precondition
// (bad dimensions, non-normalized distributions, malformed files).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a numerical routine cannot produce a usable answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace locc
