#pragma once

#include <stdexcept>
#include <string>

namespace vads {

// Bad input: malformed config, violated precondition, inconsistent shapes.
// The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable or inconsistent files on disk.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vads
