#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blowup {

/// Malformed expression text. `offset()` is the byte offset of the
/// offending token in the source string.
class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::invalid_argument(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Bad input: unknown names, invalid parameters, method/problem mismatch,
/// points outside a domain. Raised before any integration work is done.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a result (divergent integral,
/// denominator guard, run halted too early, unreachable accuracy target).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blowup
