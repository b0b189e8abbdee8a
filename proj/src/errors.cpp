#include "sae/errors.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace sae {

namespace {
std::mutex warn_mutex;
WarningHandler& handler() {
  static WarningHandler h;
  return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) {
  std::lock_guard<std::mutex> lock(warn_mutex);
  handler() = std::move(h);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(warn_mutex);
  if (handler()) {
    handler()(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

}  // namespace sae
