#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace surp {

// Raised for bad user input (malformed files, invalid arguments, data that
// a model cannot score). The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file format violation. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace surp
