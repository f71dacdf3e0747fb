#pragma once

#include <stdexcept>
#include <string>

namespace trt {

/// Root of all library errors; catching this covers every typed failure.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Arguments violate a documented precondition (shape, range, missing data).
struct InvalidInputError : Error {
  using Error::Error;
};

/// A linear system that the theory promises to be solvable turned out
/// singular at the configured tolerance. first/second identify the offending
/// direction pair when one is known, else both are -1.
struct DegenerateSystemError : Error {
  int first = -1;
  int second = -1;
  DegenerateSystemError(const std::string& msg, int a = -1, int b = -1)
      : Error(msg), first(a), second(b) {}
};

/// A geometric contract (encompassing curve, support containment) does not
/// hold for the supplied configuration.
struct ContractViolationError : Error {
  using Error::Error;
};

/// Plane meets the curve tangentially; the affected sample must be skipped.
struct TangencyError : Error {
  using Error::Error;
};

/// Requested evaluation point lies outside the reconstructed domain.
struct OutOfDomainError : Error {
  using Error::Error;
};

/// Operation is defined only for other dimensions (even-n Radon inversion).
struct UnsupportedDimensionError : Error {
  using Error::Error;
};

/// Sampled planes through a point do not provide enough intersection data.
struct CoverageError : Error {
  using Error::Error;
};

/// File or stream-level failure in the grid container format.
struct IoError : Error {
  using Error::Error;
};

}  // namespace trt
