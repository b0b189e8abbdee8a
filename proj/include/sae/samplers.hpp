#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sae/mcmc.hpp"
#include "sae/nngp.hpp"
#include "sae/rng.hpp"

namespace sae {

// Logistic regression with a county random intercept, sampled by adaptive
// random-walk Metropolis: one joint block for (alpha0, alpha), scalar
// updates per county, conjugate inverse-gamma for sigma2_a0. Counties with
// no rows draw their intercept from the current prior.
class BernoulliStageSampler {
 public:
  BernoulliStageSampler(const Eigen::MatrixXd& V, const std::vector<int>& z,
                        const std::vector<int>& county, int J, const Priors& priors);

  void update_joint_block(Rng& rng, bool adapt);
  void update_county_intercepts(Rng& rng, bool adapt);
  void update_sigma2_a0(Rng& rng);
  void iterate(Rng& rng, bool adapt);

  double accept_rate_joint() const;
  double accept_rate_county() const;

  double alpha0 = 0.0;
  Eigen::VectorXd alpha;
  Eigen::VectorXd atilde0;
  double sigma2_a0 = 1.0;

 private:
  double log_lik_joint(double a0, const Eigen::VectorXd& a) const;
  double log_lik_county(int j, double aj) const;
  void refresh_eta();

  const Eigen::MatrixXd& V_;
  std::vector<int> z_;
  std::vector<int> county_;
  int J_;
  Priors priors_;
  std::vector<std::vector<int>> rows_;  // per-county row indices
  Eigen::VectorXd eta_;                 // cached linear predictor

  // adaptation state
  Eigen::VectorXd run_mean_, run_m2_;
  long run_n_ = 0;
  double joint_scale_ = 0.1;
  std::vector<double> county_sd_;
  long joint_tries_ = 0, joint_acc_ = 0, county_tries_ = 0, county_acc_ = 0;
  long joint_batch_tries_ = 0, joint_batch_acc_ = 0;
  std::vector<long> county_batch_tries_, county_batch_acc_;
  long batch_index_ = 0;
  bool separation_warned_ = false;
};

// Free flag set so internal tooling can exercise combinations outside the
// public estimator table.
struct GaussianOptions {
  bool varying_coefficients = false;
  bool county_residual_variance = false;
  bool spatial_intercept = false;
  int nngp_neighbors = 15;
};

// Linear model with county random intercept, optional random slopes,
// optional county residual variances and optional NNGP spatial intercept.
// Every block is conjugate except phi (random-walk MH on log phi).
class GaussianStageSampler {
 public:
  GaussianStageSampler(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<int>& county, int J,
                       const std::vector<double>& x_km, const std::vector<double>& y_km,
                       const GaussianOptions& options, const Priors& priors);

  void update_fixed(Rng& rng);
  void update_county_intercepts(Rng& rng);
  void update_sigma2_b0(Rng& rng);
  void update_county_slopes(Rng& rng);
  void update_sigma2_bk(Rng& rng);
  void update_residual_variance(Rng& rng);
  void update_w(Rng& rng);
  void update_sigma2_w(Rng& rng);
  void update_phi(Rng& rng, bool adapt);
  void iterate(Rng& rng, bool adapt);

  // Overdispersed chain initialization; refactorizes the NNGP.
  void set_phi(double new_phi);

  // Replace the response in place (same length); successive-conditional
  // simulation regenerates y between parameter sweeps.
  void set_response(const Eigen::VectorXd& y);

  double accept_rate_phi() const;
  double residual_variance(int row) const;
  // y minus every mean term except the ones named
  Eigen::VectorXd residual_excluding_fixed() const;
  Eigen::VectorXd residual_full() const;

  const GaussianOptions& options() const { return options_; }
  const NeighborGraph& graph() const { return graph_; }

  double beta0 = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd btilde0;      // length J
  double sigma2_b0 = 1.0;
  Eigen::MatrixXd btilde;       // J x p (CVC)
  Eigen::VectorXd sigma2_bk;    // length p (CVC)
  double tau2 = 1.0;            // shared residual variance
  Eigen::VectorXd tau1j;        // length J (CRV)
  Eigen::VectorXd w;            // length n (SVI)
  double sigma2_w = 1.0;
  double phi = 0.1;

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  std::vector<int> county_;
  int J_;
  GaussianOptions options_;
  Priors priors_;
  std::vector<std::vector<int>> rows_;
  NeighborGraph graph_;
  ConditionalFactors factors_;
  double phi_sd_ = 0.5;
  long phi_tries_ = 0, phi_acc_ = 0, phi_batch_tries_ = 0, phi_batch_acc_ = 0;
  long phi_batch_index_ = 0;
};

}  // namespace sae
