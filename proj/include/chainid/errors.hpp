#pragma once

#include <stdexcept>
#include <string>

#include "chainid/types.hpp"

namespace chainid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON or CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Data pipeline stage applied out of order or twice.
class StageError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures carry the last iterate so callers can report it.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, Vec last_iterate = {})
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const Vec& last_iterate() const { return last_iterate_; }

 private:
  Vec last_iterate_;
};

/// |det J_u| fell below the singularity threshold.
class SingularJu : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoFeasiblePoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegrationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace chainid
