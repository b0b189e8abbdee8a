#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sae/data.hpp"
#include "sae/freq.hpp"
#include "sae/mcmc.hpp"
#include "sae/predict.hpp"

namespace sae {

struct CountyEstimate {
  int county_id = -1;
  double estimate = 0.0;
  double rmse_hat = 0.0;  // bootstrap RMSE-hat or posterior sd
  double lo = 0.0;        // frequentist: +-1.96 RMSE-hat; Bayesian: q025/q975
  double hi = 0.0;
};

struct EstimatorConfig {
  ModelSpec spec;
  Priors priors;
  McmcConfig mcmc;
  int bootstrap_B = 500;
  int predict_m = 15;  // neighbors for w prediction at new sites
  int root = 2;
  std::uint64_t seed = 0;
};

// Everything needed to produce county estimates or unit predictions after
// one fit of either paradigm.
struct FittedEstimator {
  EstimatorConfig cfg;
  int J = 0;
  std::optional<FitResult> bayes;
  std::optional<LmmFit> lmm;
  std::optional<GlmmFit> glmm;
  SampleMatrices sample;  // retained for the parametric bootstrap
};

FittedEstimator fit_estimator(const EstimatorConfig& cfg, const PlotData& sample, int J);

struct EstimatorResult {
  std::vector<CountyEstimate> counties;  // counties present in the grid
  ChainDiagnostics diagnostics;
  bool converged = true;
  int bootstrap_failures = 0;
};

EstimatorResult estimate_counties(const FittedEstimator& fit, const GridData& grid);

struct UnitCvPrediction {
  double point = 0.0;  // original-scale point prediction
  double lo = 0.0;
  double hi = 0.0;
  bool has_interval = false;
};

// Held-out unit predictions for cross-validation: posterior-predictive mean
// and quantiles for Bayesian fits, the plug-in product for the frequentist.
std::vector<UnitCvPrediction> predict_holdout(const FittedEstimator& fit, const GridData& holdout);

}  // namespace sae
