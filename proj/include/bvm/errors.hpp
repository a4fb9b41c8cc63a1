#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bvm {

/// Raised when arguments violate an operation's preconditions
/// (dimension mismatch, malformed vectors, out-of-range parameters).
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the text readers. `line()` is 1-based; 0 means "whole file".
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bvm
