#pragma once

#include <stdexcept>
#include <string>

namespace dcw {

/// Base class for all library errors. The hierarchy mirrors the CLI exit
/// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (unknown keys, bad ranges, missing
/// required fields, windows that cannot be formed from the available dates).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed row in a text input; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, long line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Numerical failure: singular systems, optimizer non-convergence, invalid
/// covariance inputs.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Model estimation failed (collinearity, degenerate series, optimizer
/// breakdown).
class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The weight solver could not produce a KKT-certified solution.
class AllocationError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace dcw
