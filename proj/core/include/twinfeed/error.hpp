#pragma once

#include <stdexcept>
#include <string>

namespace twinfeed {

/// Root of every error raised by the library. Each subclass maps onto one
/// process exit status in the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition on user-supplied parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed trace, model, or results file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix size disagreement.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Predictor training diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Feedback protocol contract broken (e.g. twin desynchronization).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Metric undefined for the given input (zero-norm channel).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace twinfeed
