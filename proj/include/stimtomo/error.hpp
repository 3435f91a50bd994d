#pragma once

#include <stdexcept>
#include <string>

namespace stimtomo {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration values (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete measurement data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Input matrix violates the density-matrix invariants.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// All-zero triangular parameters or a loss that extinguishes a beam.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient operator sets, failed eigen-solves and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stimtomo
