#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed data that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or diverged optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace saso
