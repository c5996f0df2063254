#pragma once

#include <stdexcept>
#include <string>

namespace roaforge {

// Error taxonomy; the CLI maps these onto exit codes
// (config/usage -> 2, certification -> 3, numeric -> 4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace roaforge
