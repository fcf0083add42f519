#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdprune {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to a library call (out-of-range count, bad ratio, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch detected while evaluating a model. Carries the index of the
/// offending layer, or -1 when the model input itself is wrong.
class ShapeError : public Error {
 public:
  ShapeError(long layer, const std::string& what)
      : Error(layer < 0 ? "input: " + what
                        : "layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  long layer() const noexcept { return layer_; }

 private:
  long layer_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnknownLayerKindError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ShapeInconsistencyError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// The requested pruning budget cannot be met by any valid grid choice.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An instance exceeds the size limit of an exhaustive routine.
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdprune
