#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sae/data.hpp"

namespace fixtures {

// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path(const std::string& name) const;
  const std::string& root() const { return root_; }

 private:
  std::string root_;
};

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// Captures warnings for the lifetime of the object, restoring the default
// handler afterwards.
class WarningCollector {
 public:
  WarningCollector();
  ~WarningCollector();
  WarningCollector(const WarningCollector&) = delete;
  WarningCollector& operator=(const WarningCollector&) = delete;

  bool contains(const std::string& needle) const;

  std::vector<std::string> messages;
};

sae::PlotRecord plot(const std::string& id, double x, double y, int county, double biomass,
                     std::vector<double> px = {}, std::vector<double> pv = {});

sae::GridUnit unit(double x, double y, int county, std::vector<double> px = {},
                   std::vector<double> pv = {});

}  // namespace fixtures
