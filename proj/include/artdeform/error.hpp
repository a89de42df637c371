#pragma once

#include <stdexcept>
#include <string>

namespace artdeform {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (OBJ, manifest, model). Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// An input violates a documented invariant (bad joint axis, out-of-range state, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Mismatched matrix or set shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (non-finite gradient, solver failure).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace artdeform
