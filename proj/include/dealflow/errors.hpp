#pragma once

#include <stdexcept>
#include <string>

namespace dealflow {

// Malformed input bytes (CSV/JSON). Carries a 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, long line = -1)
      : std::runtime_error(line >= 0 ? message + " (line " + std::to_string(line) + ")"
                                     : message),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

// Well-formed input that violates a domain invariant (negative counts,
// duplicate sample times, out-of-range config fields, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input too small/degenerate for the requested estimate (maps to CLI exit 3).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dealflow
