#pragma once

#include <stdexcept>
#include <string>

namespace ucov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands live in incompatible spaces or have the wrong length.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// The operation is not defined for the operand's norm kind (e.g. inner
// products outside L2).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

// Malformed descriptor, config file or estimator settings.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// Projection / component order out of range.
class InvalidOrder : public Error {
 public:
  using Error::Error;
};

// Exact path would be too large; use the heuristic entry point instead.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

// A Monte Carlo diagnostic landed inside its indeterminate band.
class IndeterminateDiagnostic : public Error {
 public:
  using Error::Error;
};

// An experiment refused to run because its precondition does not hold.
class GuardRefusal : public Error {
 public:
  using Error::Error;
};

}  // namespace ucov
