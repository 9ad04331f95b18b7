#pragma once

#include <stdexcept>
#include <string>

namespace opsyslab {

/// Malformed or out-of-contract input (dimension mismatch, non-hermitian data,
/// a violated precondition). Maps to CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not reach its accuracy target. Maps to CLI exit
/// code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace opsyslab
