#pragma once

#include <stdexcept>

namespace cvep {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad call arguments (sizes, ranges, mismatched metadata).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// On-disk container does not start with the expected magic.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Header dims and payload length disagree.
class CorruptPayload : public Error {
 public:
  using Error::Error;
};

// A container type violates one of its declared invariants.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Requested allocation would overflow size arithmetic.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Scatter matrices cannot be formed (e.g. a single class).
class DegenerateScatter : public Error {
 public:
  using Error::Error;
};

// Within-class scatter is singular and no ridge was requested.
class SingularWithin : public Error {
 public:
  using Error::Error;
};

// Lagged design matrix is identically zero.
class ZeroDesign : public Error {
 public:
  using Error::Error;
};

// A source subject lacks responses for a required class.
class MissingDataError : public Error {
 public:
  using Error::Error;
};

// Trial or template has zero variance; correlation is undefined.
class DegenerateCorrelation : public Error {
 public:
  using Error::Error;
};

// Too few classes for the requested statistic.
class InsufficientClasses : public Error {
 public:
  using Error::Error;
};

// Noise spectrum needs at least two trials.
class NoNoiseEstimate : public Error {
 public:
  using Error::Error;
};

}  // namespace cvep
