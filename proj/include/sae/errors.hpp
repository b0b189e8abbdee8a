#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace sae {

// Invalid run configuration (bad keys, bad values, missing seed).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimizer/sampler failure (non-convergence, singular system).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(const std::string&)>;

// Default handler writes to stderr. Tests install a collector.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace sae
