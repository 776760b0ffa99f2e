#pragma once

#include <stdexcept>
#include <string>

namespace zonecast {

/// Bad input: malformed files, violated preconditions, unknown config keys.
/// The CLI maps it to exit code 1; anything else escaping a command is an
/// internal error (exit code 2).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zonecast
