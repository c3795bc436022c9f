#pragma once

#include <stdexcept>
#include <string>

namespace corrgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed structural input: non-square, non-finite, non-bijective.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Length or dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but lies outside the mathematical domain (e.g. not PSD).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Data is unusable for estimation (zero variance, too few rows).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// A configuration object violates its invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system failure or a malformed file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver failure, non-finite loss and the like.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace corrgan
