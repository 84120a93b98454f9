#pragma once

#include <stdexcept>
#include <string>

namespace flexgrid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that violates a documented schema or invariant.  The message
/// carries the offending field path (e.g. `loads[2].phase`).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel failed (singular matrix, Newton divergence, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The current operating point already violates the voltage band, so no
/// flexibility range around it is defined.
class InfeasibleAnchorError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexgrid
