#pragma once

#include <stdexcept>
#include <string>

namespace servokit {

/// Base class for all recoverable domain errors. The CLI maps these to
/// exit code 1; usage errors exit with 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration: unknown key, unparsable value, invalid parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written, or has a malformed format.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A call contract was violated (wrong frame tag, wrong channel count, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Jacobian or interaction-matrix stack is rank deficient and no damping
/// was requested; the solve cannot proceed.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A point to be projected lies at or behind the camera plane (z <= 0).
class BehindCameraError : public Error {
 public:
  using Error::Error;
};

/// A feature depth is not strictly positive.
class InvalidDepthError : public Error {
 public:
  using Error::Error;
};

/// Edge map contains no edge pixels; there is nothing to annotate.
class NoTargetError : public Error {
 public:
  using Error::Error;
};

/// Extremal edge pixels collapse onto each other or are collinear; no
/// quadrilateral can be formed.
class DegenerateQuadError : public Error {
 public:
  using Error::Error;
};

/// Two corner roles map to the same point; the canonical order is ambiguous.
class AmbiguousOrderError : public Error {
 public:
  using Error::Error;
};

/// Label sets carry different units (pixels vs normalized).
class UnitMismatchError : public Error {
 public:
  using Error::Error;
};

/// Two label tables do not cover the same image ids.
class IdMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace servokit
