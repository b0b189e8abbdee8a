#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "sae/errors.hpp"

namespace fs = std::filesystem;

namespace fixtures {

namespace {
std::atomic<int> dir_counter{0};
}

TempDir::TempDir() {
  auto base = fs::temp_directory_path() / "sae_test";
  fs::create_directories(base);
  root_ = (base / ("d" + std::to_string(::getpid()) + "_" +
                   std::to_string(dir_counter.fetch_add(1))))
              .string();
  fs::create_directories(root_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(root_, ec);
}

std::string TempDir::path(const std::string& name) const {
  return (fs::path(root_) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("fixture: cannot open " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fixture: cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

WarningCollector::WarningCollector() {
  sae::set_warning_handler([this](const std::string& m) { messages.push_back(m); });
}

WarningCollector::~WarningCollector() { sae::set_warning_handler({}); }

bool WarningCollector::contains(const std::string& needle) const {
  for (const auto& m : messages)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

sae::PlotRecord plot(const std::string& id, double x, double y, int county, double biomass,
                     std::vector<double> px, std::vector<double> pv) {
  sae::PlotRecord r;
  r.id = id;
  r.x = x;
  r.y = y;
  r.county_id = county;
  r.biomass = biomass;
  r.predictors_x = std::move(px);
  r.predictors_v = std::move(pv);
  return r;
}

sae::GridUnit unit(double x, double y, int county, std::vector<double> px,
                   std::vector<double> pv) {
  sae::GridUnit u;
  u.x = x;
  u.y = y;
  u.county_id = county;
  u.predictors_x = std::move(px);
  u.predictors_v = std::move(pv);
  return u;
}

}  // namespace fixtures
