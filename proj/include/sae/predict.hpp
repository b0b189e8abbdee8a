#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sae/data.hpp"
#include "sae/mcmc.hpp"
#include "sae/transforms.hpp"

namespace sae {

// Pairwise summation; mean of a sequence without running-sum drift.
double stable_mean(const double* v, std::size_t n);
double stable_mean(const std::vector<double>& v);

// Median-unbiased interpolation (type 8), exact on small hand cases.
double quantile_type8(std::vector<double> sorted_or_not, double p);

struct CountyPosterior {
  int county_id = -1;
  Eigen::VectorXd draws;  // mu_j^(s), length M
  double mean = 0.0;
  double sd = 0.0;  // sqrt of the posterior variance, the MSE estimate
  double q025 = 0.0;
  double q975 = 0.0;
};

void summarize(CountyPosterior& cp);
double summarize_point(const CountyPosterior& cp);

// Per-draw average of the units already mapped to one county.
CountyPosterior aggregate_county(const std::vector<Eigen::VectorXd>& unit_draws, int county_id);

struct PredictOptions {
  int nngp_m = 15;        // neighbors used when predicting w at new sites
  double tau2_2 = 1e-6;   // z=0 residual variance
  std::uint64_t seed = 0; // per-unit streams derive from this
};

// One posterior-predictive draw per retained iteration, back-transformed by
// the naive inverse. unit_index fixes the unit's random stream.
Eigen::VectorXd posterior_predict_unit(const PosteriorDraws& draws, const GridUnit& unit,
                                       const Transform& transform, const PredictOptions& opts,
                                       std::uint64_t unit_index);

struct UnitSummary {
  double p_mean = 1.0;        // posterior mean presence probability
  double biomass_mean = 0.0;  // posterior mean back-transformed response
};

struct CountyPredictions {
  std::vector<CountyPosterior> counties;  // one entry per county with grid units
  std::vector<UnitSummary> units;         // grid order; filled when requested
};

// Streams over the grid county by county with an O(M) accumulator.
CountyPredictions posterior_predict_counties(const PosteriorDraws& draws, const GridData& grid,
                                             int J, const Transform& transform,
                                             const PredictOptions& opts,
                                             bool want_unit_summaries = false);

}  // namespace sae
