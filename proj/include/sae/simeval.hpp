#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sae/data.hpp"
#include "sae/estimators.hpp"

namespace sae {

struct SimPopulation {
  GridData pixels;
  std::vector<double> biomass;   // imputed, one value per pixel
  Eigen::VectorXd true_means;    // exact county means
  int J = 0;
};

// kNN imputation in standardized predictor space, within strata, neighbors
// weighted by bootstrap inclusion counts (one resample per stratum per
// generation; zero-weight donors drop out of the pool).
SimPopulation generate_population(const GridData& pixels, const PlotData& donors,
                                  const std::vector<std::string>& pixel_strata,
                                  const std::vector<std::string>& donor_strata, int k, int J,
                                  std::uint64_t seed);

// Simple random sample without replacement of n_j pixels within each county.
PlotData draw_sample(const SimPopulation& pop, const std::vector<int>& sizes,
                     std::uint64_t seed);

struct MetricsRecord {
  int county_id = -1;
  double rmse = 0.0;
  double bias = 0.0;
  double rmse_hat_bias = 0.0;
  double coverage = 0.0;
  int replicates = 0;  // successful replicates entering the averages
};

// Pure metric arithmetic for one county over d replicates; intervals are
// closed on both ends.
MetricsRecord compute_metrics(const std::vector<double>& estimates,
                              const std::vector<double>& rmse_hats,
                              const std::vector<std::pair<double, double>>& intervals,
                              double truth);

using CountyEstimatorFn = std::function<std::vector<CountyEstimate>(
    const PlotData& sample, const GridData& pixels, int J, std::uint64_t seed)>;

struct NamedEstimator {
  std::string name;
  CountyEstimatorFn fn;
};

struct DesignMetrics {
  std::string estimator;
  std::vector<MetricsRecord> counties;
  int failures = 0;
  int d = 0;
};

std::vector<DesignMetrics> run_design(const SimPopulation& pop, const std::vector<int>& sizes,
                                      const std::vector<NamedEstimator>& estimators, int d,
                                      std::uint64_t seed);

using UnitPredictorFn = std::function<std::vector<UnitCvPrediction>(
    const PlotData& train, const GridData& holdout, int J, std::uint64_t seed)>;

struct CvMetrics {
  double rmspe = 0.0;
  double bias = 0.0;
  std::optional<double> coverage;  // absent when the predictor has no intervals
  int n = 0;
};

// Uniform random partition into K folds (sizes differ by at most one); each
// unit is predicted exactly once while held out.
CvMetrics kfold_cv(const PlotData& data, int J, int K, const UnitPredictorFn& predictor,
                   std::uint64_t seed);

std::vector<std::vector<int>> make_folds(int n, int K, std::uint64_t seed);

}  // namespace sae
