#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sae/rng.hpp"

namespace sae {

struct SpatialParams {
  double sigma2_w = 1.0;
  double phi = 1.0;  // exponential decay, 1/km
};

// Distance at which exponential correlation decays to 0.05.
double effective_range(double phi);
double phi_from_range(double range_km);

// Sites are ordered by x (ties by y); neighbor sets contain up to m nearest
// previously ordered sites. All per-site arrays are indexed by ordered
// position; `order` maps position -> original site index. Distances are
// cached so refactorizing at new (sigma2_w, phi) costs no distance work.
struct NeighborGraph {
  int m = 0;
  std::vector<int> order;                    // position -> original index
  std::vector<int> rank;                     // original index -> position
  std::vector<std::vector<int>> neighbors;   // positions of neighbors
  std::vector<Eigen::VectorXd> dist_to;      // site -> neighbor distances
  std::vector<Eigen::MatrixXd> dist_nn;      // neighbor pairwise distances
  // children[k]: (position c, index of k within neighbors[c]) for every
  // later site conditioning on k; drives the sequential Gibbs scan.
  std::vector<std::vector<std::pair<int, int>>> children;

  int n() const { return static_cast<int>(order.size()); }
};

NeighborGraph build_graph(const std::vector<double>& x, const std::vector<double>& y, int m);

// b on the correlation scale (sigma2_w cancels), f_abs = sigma2_w * f_corr.
struct ConditionalFactors {
  std::vector<Eigen::VectorXd> b;
  std::vector<double> f_corr;
  std::vector<double> f_abs;
  SpatialParams params;
};

ConditionalFactors factorize(const NeighborGraph& graph, const SpatialParams& params);

// w is in original site order; sum of univariate conditional log-densities.
double log_density(const Eigen::VectorXd& w, const ConditionalFactors& factors,
                   const NeighborGraph& graph);

// sum_i (w_i - b_i' w_N(i))^2 / f_corr_i, the quadratic form feeding the
// conjugate sigma2_w update: IG(shape + n/2, scale + quad/2).
double corr_quadform(const Eigen::VectorXd& w, const ConditionalFactors& factors,
                     const NeighborGraph& graph);

struct PhiPrior {
  double lower = 0.003;
  double upper = 3.0;
};

// Random walk on log(phi) with Jacobian correction; proposals outside the
// prior support are rejected. On acceptance params/factors are updated in
// place. Returns the accepted flag.
bool sample_phi_mh(SpatialParams& params, ConditionalFactors& factors,
                   const Eigen::VectorXd& w, const NeighborGraph& graph,
                   const PhiPrior& prior, double proposal_sd, Rng& rng);

// Conditional prediction of w at new sites from the m nearest observed
// sites. Precomputes neighbor sets once; the per-draw solve is m x m.
class WPredictor {
 public:
  WPredictor(const std::vector<double>& obs_x, const std::vector<double>& obs_y, int m);

  struct Site {
    std::vector<int> nn;        // observed-site indices
    Eigen::VectorXd dist;       // new site -> neighbors
    Eigen::MatrixXd dist_nn;    // neighbor pairwise distances
  };

  Site site_for(double x, double y) const;

  // Conditional N(mean, var) of w(new) given w at the site's neighbors.
  void conditional(const Site& site, const SpatialParams& params,
                   const double* w_obs, double& mean, double& var) const;

  int n_obs() const { return static_cast<int>(obs_x_.size()); }
  int m() const { return m_; }

 private:
  std::vector<double> obs_x_, obs_y_;
  int m_;
};

// Batch form: w_draws is M x n_obs, params_draws has length M; returns
// M x n_new draws of w at the new sites.
Eigen::MatrixXd predict_w(const std::vector<std::pair<double, double>>& new_coords,
                          const std::vector<std::pair<double, double>>& obs_coords,
                          const Eigen::MatrixXd& w_draws,
                          const std::vector<SpatialParams>& params_draws, int m, Rng& rng);

}  // namespace sae
