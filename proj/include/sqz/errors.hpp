#pragma once

#include <stdexcept>
#include <string>

namespace sqz {

// Unparsable or inconsistent configuration text.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed data files (stream files, CSVs).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure failed to converge.
class NonConvergenceError : public std::runtime_error {
 public:
  explicit NonConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace sqz
