#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wptlab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition or type invariant was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Moments that cannot come from any real signal (m4 < m2^2 beyond noise).
class InvalidMomentsError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class DivergentIntegralError : public Error {
 public:
  using Error::Error;
};

// Adaptive quadrature could not meet its tolerance within the subdivision budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t step_index)
      : Error(what + " (step " + std::to_string(step_index) + ")"), message_(what), step_index_(step_index) {}

  std::size_t step_index() const noexcept { return step_index_; }
  SolverError with_context(const std::string& prefix) const { return {prefix + message_, step_index_}; }

 private:
  std::string message_;
  std::size_t step_index_;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; line is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace wptlab
