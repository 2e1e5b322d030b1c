#pragma once

#include <stdexcept>
#include <string>

namespace strokenet {

// Error families map onto the CLI exit codes (2, 3, 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace strokenet
