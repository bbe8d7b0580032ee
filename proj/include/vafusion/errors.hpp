#pragma once

#include <stdexcept>
#include <string>

namespace vaf {

// Error families map onto distinct CLI exit codes (see tools/vafusion.cpp).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace vaf
