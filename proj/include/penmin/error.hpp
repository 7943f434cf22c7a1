#pragma once

#include <stdexcept>
#include <string>

namespace penmin {

// Precondition violated by the caller (bad sizes, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine (SVD, eigendecomposition) did not converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A calibrated constant was requested from a result that carries a failure marker.
class CalibrationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The theorem's structural hypothesis (a model with D <= D_m1/20) does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace penmin
