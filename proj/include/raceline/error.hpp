#pragma once

#include <stdexcept>
#include <string>

namespace raceline {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter, index or sample outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed call arguments (ordering, sizes, non-finite inputs).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Request for a capability the implementation does not provide.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Iterative numerics failed (root finding, fixpoint sweeps, singular systems).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Least-squares spline fit is ill-posed for the given data.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Input file or payload could not be parsed or failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Track geometry cannot host a feasible raceline (e.g. margin eats the width).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace raceline
