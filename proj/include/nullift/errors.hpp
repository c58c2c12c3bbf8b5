#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nullift {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is the 0-based offset of the
/// offending token in the source string.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position, std::string token)
      : Error(what), position_(position), token_(std::move(token)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t position_;
  std::string token_;
};

/// Evaluation outside the domain of an elementary function, or a derivative
/// requested at a kink of abs/sign.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// det g = 0 (or numerically indistinguishable from it) at a queried point.
class SingularMetricError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied data that violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The null condition has no real solution for the requested momentum.
class NoRealSolutionError : public Error {
 public:
  using Error::Error;
};

/// Adaptive integration failed (step-size underflow, step budget exhausted).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A structural constraint (Eisenhart-Duval form, fixed momentum, ...) is
/// violated on the supplied sample.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace nullift
