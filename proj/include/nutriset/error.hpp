#pragma once

#include <stdexcept>
#include <string>

namespace nutriset {

// Bad user input (flags, config values). Maps to CLI exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable files, broken config, internal consistency violations.
// Maps to CLI exit status 2.
class FatalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nutriset
