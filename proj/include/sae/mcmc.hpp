#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sae/data.hpp"
#include "sae/rng.hpp"

namespace sae {

struct Priors {
  double var_fixed = 1000.0;  // N(0, var_fixed) on all fixed effects
  double ig_shape = 2.0;      // IG(shape, scale) on every variance component
  double ig_scale = 1.0;
  double phi_lower = 0.003;
  double phi_upper = 3.0;
  double tau2_2 = 1e-6;       // z=0 residual variance, fixed, never sampled

  void validate() const;
};

struct McmcConfig {
  int chains = 3;
  int iterations = 15000;
  int burn_in = 5000;
  int thin = 10;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> chain_seeds;  // optional; must be distinct
  double psrf_threshold = 1.1;

  int retained_per_chain() const { return (iterations - burn_in) / thin; }
  int total_retained() const { return chains * retained_per_chain(); }
  void validate() const;
};

// Retained draws, M rows per block. Blocks absent from the model have
// zero columns. btilde is flattened J x p, column j*p + k.
struct PosteriorDraws {
  ModelSpec spec;
  int M = 0;
  int J = 0;
  int p = 0;
  int q = 0;

  Eigen::VectorXd alpha0;
  Eigen::MatrixXd alpha;      // M x q
  Eigen::MatrixXd atilde0;    // M x J
  Eigen::VectorXd sigma2_a0;

  Eigen::VectorXd beta0;
  Eigen::MatrixXd beta;       // M x p
  Eigen::MatrixXd btilde0;    // M x J
  Eigen::VectorXd sigma2_b0;
  Eigen::MatrixXd btilde;     // M x J*p, CVC only
  Eigen::MatrixXd sigma2_bk;  // M x p, CVC only
  Eigen::MatrixXd tau2;       // M x 1, or M x J under CRV
  Eigen::VectorXd sigma2_w;   // SVI only
  Eigen::VectorXd phi;        // SVI only
  Eigen::MatrixXd w;          // M x n_w, SVI only
  std::vector<double> w_x, w_y;  // site coordinates backing the w columns

  double tau2_at(int s, int county) const {
    return tau2.cols() == 1 ? tau2(s, 0) : tau2(s, county);
  }
};

struct ChainDiagnostics {
  std::map<std::string, double> psrf;  // per scalar parameter (w excluded)
  double max_psrf = 1.0;
  bool converged = true;
  double accept_phi = 0.0;
  double accept_alpha_block = 0.0;
  double accept_atilde0 = 0.0;
};

// Split potential-scale-reduction statistic; each element is one chain's
// retained draws of a single scalar parameter.
double psrf(const std::vector<Eigen::VectorXd>& chains);

// Row-aligned inputs for a full model fit. y_t holds the transformed
// response for every row; two-stage specs restrict the continuous stage to
// z=1 rows internally.
struct FitData {
  Eigen::MatrixXd X;  // n x p continuous-stage predictors
  Eigen::MatrixXd V;  // n x q Bernoulli-stage predictors
  Eigen::VectorXd y_t;
  std::vector<int> z;
  std::vector<int> county;
  std::vector<double> x_km, y_km;
  int J = 0;

  int n() const { return static_cast<int>(county.size()); }
  void validate() const;
};

struct FitResult {
  PosteriorDraws draws;
  ChainDiagnostics diagnostics;
};

FitResult run_chains(const ModelSpec& spec, const FitData& data, const Priors& priors,
                     const McmcConfig& config);

// Named flattened view of every retained scalar block except w, one row per
// retained iteration; used for diagnostics and the params export.
std::vector<std::string> param_names(const PosteriorDraws& draws);
Eigen::MatrixXd param_matrix(const PosteriorDraws& draws);

void write_draws_csv(const std::string& path, const PosteriorDraws& draws);

FitData make_fit_data(const PlotData& plots, const CountyTable& counties, int root);

}  // namespace sae
