#pragma once

#include <stdexcept>
#include <string>

namespace rescon {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Structural problem in an input document: unknown key, wrong type,
/// missing required field, unreadable file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A value violates an object invariant (dt <= 0, negative weight, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The digraph has no directed spanning tree.
class NoSpanningTree : public Error {
 public:
  using Error::Error;
};

class EmptySubset : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured cap.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// (A, B) admits no stabilizing state feedback, or the Riccati iteration
/// failed to converge.
class NotStabilizable : public Error {
 public:
  using Error::Error;
};

/// A variance or covariance fell at or below the degeneracy floor.
class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

/// A windowed estimator was invoked with fewer samples than it needs.
class TooFewSamples : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature failed to reach the requested tolerance.
class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

/// Threshold calibration was asked to run on a scenario that contains
/// attacks; calibration is only meaningful attack-free.
class RefusesAttackScenario : public Error {
 public:
  using Error::Error;
};

}  // namespace rescon
