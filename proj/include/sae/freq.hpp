#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sae/data.hpp"
#include "sae/rng.hpp"
#include "sae/transforms.hpp"

namespace sae {

struct LmmFit {
  double beta0_hat = 0.0;
  Eigen::VectorXd beta_hat;
  double sigma2_b0_hat = 0.0;
  double tau2_hat = 0.0;
  Eigen::VectorXd blups;  // county effects, length J; 0 for counties without data
  double lambda_hat = 0.0;  // sigma2_b0 / tau2 at the optimum
};

// REML for the one-random-intercept linear mixed model, solved by profiling
// fixed effects and the residual variance, then a 1-D search over the
// variance ratio. fixed_ratio pins the ratio (0 reduces the fit to OLS).
LmmFit fit_lmm_reml(const Eigen::VectorXd& y_t, const Eigen::MatrixXd& X,
                    const std::vector<int>& county, int J,
                    std::optional<double> fixed_ratio = std::nullopt);

struct GlmmFit {
  double alpha0_hat = 0.0;
  Eigen::VectorXd alpha_hat;
  double sigma2_a0_hat = 0.0;
  Eigen::VectorXd county_modes;  // length J; 0 for counties without data
  Eigen::VectorXd std_errors;    // for (alpha0, alpha), from the Laplace Hessian
  bool ridge_applied = false;
};

// Laplace-approximated marginal likelihood for the random-intercept
// logistic model: outer 1-D search on log sigma2, inner penalized Newton on
// (alpha, u). Complete separation falls back to a small L2 penalty on the
// fixed effects and reports it.
GlmmFit fit_bernoulli_glmm_laplace(const std::vector<int>& z, const Eigen::MatrixXd& V,
                                   const std::vector<int>& county, int J);

struct UnitPrediction {
  double y_t_hat = 0.0;  // transformed-scale mean
  double p_hat = 0.0;    // presence probability
  double product = 0.0;  // bias-corrected back-transform times p_hat
};

// Dense view of a prediction grid shared by point prediction and bootstrap.
struct GridMatrices {
  Eigen::MatrixXd X;  // n* x p
  Eigen::MatrixXd V;  // n* x q
  std::vector<int> county;
  int J = 0;
  std::vector<std::vector<int>> county_units;
};

GridMatrices grid_matrices(const GridData& grid, int J);

std::vector<UnitPrediction> predict_units(const LmmFit& lmm, const GlmmFit& glmm,
                                          const GridMatrices& grid, const Transform& transform);

// mu_hat_j = mean over the county's grid units of the per-unit product.
Eigen::VectorXd estimate_county_means(const std::vector<UnitPrediction>& units,
                                      const GridMatrices& grid);

// Sample rows needed to resimulate the two-stage model in the bootstrap.
struct SampleMatrices {
  Eigen::MatrixXd X;  // n x p
  Eigen::MatrixXd V;  // n x q
  std::vector<int> county;
  int J = 0;
};

struct BootstrapReplicate {
  Eigen::VectorXd truth;     // mu_j^(b) over the grid
  Eigen::VectorXd estimate;  // refitted mu_hat_j^(b)
  bool ok = false;
};

BootstrapReplicate bootstrap_replicate(const LmmFit& lmm, const GlmmFit& glmm,
                                       const SampleMatrices& sample, const GridMatrices& grid,
                                       const Transform& transform, std::uint64_t seed);

struct BootstrapMse {
  Eigen::VectorXd rmse_hat;  // length J
  int failures = 0;
  int B = 0;
};

BootstrapMse bootstrap_mse(const LmmFit& lmm, const GlmmFit& glmm,
                           const SampleMatrices& sample, const GridMatrices& grid,
                           const Transform& transform, int B, std::uint64_t seed);

}  // namespace sae
