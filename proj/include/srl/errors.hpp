#pragma once

#include <stdexcept>
#include <string>

namespace srl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A matrix required to have full column rank does not.
struct RankDeficientError : Error {
  using Error::Error;
};

// A vector lies (numerically) in the range of a matrix where it must not.
struct InRangeError : Error {
  using Error::Error;
};

// The SMW inverse failed its own residual validation; the instance is too
// ill-conditioned to trust the closed form.
struct SmwResidualError : Error {
  using Error::Error;
};

// Residual b - Ax is numerically zero, so the normalized dual residual is
// undefined.
struct ZeroResidualError : Error {
  using Error::Error;
};

struct DualInfeasibleError : Error {
  using Error::Error;
};

// Instance exceeds the size limit of the exhaustive oracle.
struct TooLargeError : Error {
  using Error::Error;
};

// Active-set search for the directional derivative failed to settle.
struct DegenerateError : Error {
  using Error::Error;
};

// A regularity precondition (intermediate/strong) required by the requested
// computation does not hold.
struct PreconditionError : Error {
  using Error::Error;
};

// A report flag needed by the computation is indeterminate.
struct IndeterminateError : Error {
  using Error::Error;
};

struct InvalidConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace srl
