#pragma once

#include <string>
#include <vector>

#include "sae/data.hpp"
#include "sae/estimators.hpp"
#include "sae/mcmc.hpp"

namespace sae {

// Fitted-model archive: a directory of plain-text matrices plus a JSON
// manifest. Bayesian fits store the retained draws (params.csv, w.csv,
// sites.csv) and a posterior summary; frequentist fits store point
// estimates and the sample matrices the bootstrap needs.
struct ArchiveManifest {
  int format_version = 1;
  std::string model;
  std::string paradigm;
  std::string config_hash;
  int root = 2;
  std::uint64_t seed = 0;
  std::vector<std::string> counties;
  std::vector<std::string> predictors_x, predictors_v;
  PredictorStats standardization;
  Priors priors;
  int chains = 0, iterations = 0, burn_in = 0, thin = 0, M = 0;
  int bootstrap_b = 0;
  int predict_m = 15;
  bool converged = true;
  double max_psrf = 1.0;
  int n_w = 0;
};

void write_archive(const std::string& dir, const ArchiveManifest& manifest,
                   const FittedEstimator& fit);

struct LoadedArchive {
  ArchiveManifest manifest;
  FittedEstimator fit;
  CountyTable counties;
};

LoadedArchive load_archive(const std::string& dir);

// Posterior summary rows (parameter, mean, q025, q975), with the derived
// effective range appended after phi.
void write_posterior_summary(const std::string& path, const PosteriorDraws& draws);

}  // namespace sae
