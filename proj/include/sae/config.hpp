#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sae/mcmc.hpp"

namespace sae {

// Parsed run configuration. One JSON file drives all four commands; each
// command validates the subset of fields it needs. Unknown keys anywhere in
// the tree are rejected.
struct SimBlock {
  bool synthetic = false;
  int grid_side = 317;
  int n_donors = 2500;
  std::uint64_t scene_seed = 20240801;
  std::string pixels;  // real-data mode: grid-format CSV
  std::string donors;  // real-data mode: plot-format CSV
  std::string stratify_by;
  double stratify_threshold = 10.0;
  int k = 5;
  int d = 2;
  std::vector<int> sizes;
  int size_per_county = 0;
  bool oracle_truth = false;  // include the exact-truth fixture estimator
};

struct CvBlock {
  int k_folds = 10;
};

struct PredictBlock {
  std::string archive;
  std::string grid;
  bool unit_csv = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  int workers = 0;  // 0 = all available cores
  int transform_root = 2;
  std::vector<std::string> predictors_x, predictors_v;
  std::set<std::string> constant_predictors;
  std::vector<std::string> models;
  Priors priors;
  McmcConfig mcmc;
  int bootstrap_b = 500;
  int predict_m = 15;
  int nngp_m = 15;
  std::string plots;  // fit / cv input
  PredictBlock predict;
  SimBlock sim;
  CvBlock cv;
};

RunConfig load_config(const std::string& path);

// Throws ConfigError when fields required by the command are missing or
// malformed; checks referenced paths exist.
void validate_config(const RunConfig& cfg, const std::string& command);

// Canonical serialized form of the effective configuration (post overrides)
// and its FNV-1a hash, recorded in archive manifests.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace sae
