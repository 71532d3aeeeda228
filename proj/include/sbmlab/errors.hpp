#pragma once

#include <stdexcept>
#include <string>

namespace sbmlab {

// Invalid model/config input (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (maps to CLI exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sbmlab
