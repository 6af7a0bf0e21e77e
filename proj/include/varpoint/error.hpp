#pragma once

#include <stdexcept>
#include <string>

namespace varpoint {

/// Invalid number-format parameters or operands that do not belong to a format.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration text or an unreadable config/dataset file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void format_error(const std::string& what) { throw FormatError(what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) format_error(what);
}

}  // namespace detail
}  // namespace varpoint
