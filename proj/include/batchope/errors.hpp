#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace batchope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed configuration, inconsistent sizes, out-of-range values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An action with positive evaluation probability has zero behavior
/// probability where an estimator needs it as an importance denominator.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure, e.g. a singular linear system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace batchope
