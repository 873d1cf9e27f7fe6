#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mirank {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a domain invariant (ids, prices, dimensions, label sets).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Metric undefined for the given labels (e.g. no positives).
class MetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite loss or parameters during training or gradient evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Base for malformed persisted data.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Malformed log line; carries the 1-based line number.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mirank
