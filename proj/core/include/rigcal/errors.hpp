#pragma once

#include <stdexcept>
#include <string>

namespace rigcal {

// Base class for every library error so callers can catch in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A parameter left its feasibility interval before barrier evaluation.
struct OutOfBoundsError : Error {
  using Error::Error;
};

// Point at or behind the image plane (z <= 1e-9); residual must be discarded.
struct BehindCameraError : Error {
  using Error::Error;
};

// Relative translation between the two views is (numerically) zero.
struct DegenerateBaselineError : Error {
  using Error::Error;
};

struct UnknownFrameError : Error {
  using Error::Error;
};

struct UnknownCameraError : Error {
  using Error::Error;
};

// Every match of a set was gated out of the reprojection loss.
struct NoAcceptedMatchesError : Error {
  using Error::Error;
};

struct InsufficientSamplesError : Error {
  using Error::Error;
};

struct InsufficientMatchesError : Error {
  using Error::Error;
};

// The optimizer produced a non-finite loss.
struct DivergedError : Error {
  using Error::Error;
};

struct IndexMismatchError : Error {
  using Error::Error;
};

struct InfeasibleVisibilityError : Error {
  using Error::Error;
};

struct SizeMismatchError : Error {
  using Error::Error;
};

struct ImageTooSmallError : Error {
  using Error::Error;
};

// Malformed input file or configuration value.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace rigcal
