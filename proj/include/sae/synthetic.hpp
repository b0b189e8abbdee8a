#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sae/data.hpp"

namespace sae {

// Self-contained zero-inflated, spatially structured landscape used by the
// simulation harness when no real pixel/donor files are supplied. Counties
// tile a square domain; biomass for donors comes from a two-stage truth with
// county effects, heteroscedastic noise, and a smooth spatial surface.
struct SyntheticConfig {
  int grid_side = 317;      // pixels per axis
  int n_donors = 2500;
  int counties_x = 4;
  int counties_y = 3;
  double domain_km = 100.0;
  std::uint64_t seed = 20240801;
};

struct SyntheticScene {
  GridData pixels;
  PlotData donors;
  CountyTable counties;
  std::vector<std::string> pixel_strata;
  std::vector<std::string> donor_strata;
  int J = 0;
};

SyntheticScene make_synthetic_scene(const SyntheticConfig& cfg);

// Treed / non-treed stratum labels from canopy cover.
std::vector<std::string> tnt_strata(const std::vector<double>& tcc, double threshold = 10.0);

// Exact generative draw from the two-stage model with a spatial intercept:
// z ~ Bern(logistic(alpha0 + atilde0_j + v'alpha)), and for z = 1,
// y_t = beta0 + btilde0_j + x'beta + w + tau1_j * eps with w a dense
// exponential-covariance Gaussian process over the positive sites.
// Used by the parameter-recovery harness.
struct ModelTruth {
  double alpha0 = -0.4;
  std::vector<double> alpha{0.8};
  double sigma2_a0 = 0.5;
  double beta0 = 5.0;
  std::vector<double> beta{1.0};
  double sigma2_b0 = 0.6;
  double sigma2_w = 1.5;
  double phi = 0.45;
  std::vector<double> tau1;  // per-county residual sds, cycled over counties
  int root = 2;
  double domain_km = 20.0;
};

PlotData simulate_model_dataset(const ModelTruth& truth, int n, int J, CountyTable& counties,
                                std::uint64_t seed);

}  // namespace sae
