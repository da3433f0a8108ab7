#pragma once

#include <stdexcept>
#include <string>

namespace vransplit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameters handed to a generator or solver.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Graph-level failures: disconnected DUs, missing CU, dangling ids.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed; the message carries the field path.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parsed object violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Mismatched inputs to an evaluation (e.g. assignment length).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Instance too large for the requested exact method.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape mismatch inside the neural kernel.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf detected in a forward value, gradient or loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration problems (missing keys, bad sweeps).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system failures; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vransplit
