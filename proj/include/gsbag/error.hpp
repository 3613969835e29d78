#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsbag {

// Problems with user-supplied data or parameters. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& message)
      : InputError(path + ":" + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The design matrix cannot be fitted (rank deficient or no residual degrees of freedom).
class DesignError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace gsbag
