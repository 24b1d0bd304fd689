#pragma once

#include <stdexcept>
#include <string>

namespace msbtree {

// Malformed input: bad weights, shape mismatches, out-of-range indices.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A dense object would exceed its configured entry cap.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Solver did not reach tolerance, or produced a non-finite quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace msbtree
