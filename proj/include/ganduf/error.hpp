#pragma once

#include <stdexcept>
#include <string>

namespace ganduf {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are not broadcast- or contraction-compatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-facing configuration (bad flag values, inconsistent presets).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data failed a semantic check (e.g. weights not on the simplex).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Base for on-disk format problems.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class SurrogateError : public Error {
 public:
  using Error::Error;
};

/// A recipe stage failed; `configuration()` tells whether the cause was a
/// configuration problem rather than a runtime failure.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool configuration)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)), configuration_(configuration) {}
  const std::string& stage() const { return stage_; }
  bool configuration() const { return configuration_; }

 private:
  std::string stage_;
  bool configuration_;
};

}  // namespace ganduf
