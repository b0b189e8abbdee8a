#include "sae/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sae/errors.hpp"

namespace sae {

namespace {
constexpr double kJitter = 1e-10;
constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
const double kRangeFactor = -std::log(0.05);

double dist(double ax, double ay, double bx, double by) {
  double dx = ax - bx, dy = ay - by;
  return std::sqrt(dx * dx + dy * dy);
}
}  // namespace

double effective_range(double phi) {
  if (!(phi > 0.0)) throw NumericError("effective_range: phi must be positive");
  return kRangeFactor / phi;
}

double phi_from_range(double range_km) {
  if (!(range_km > 0.0)) throw NumericError("phi_from_range: range must be positive");
  return kRangeFactor / range_km;
}

NeighborGraph build_graph(const std::vector<double>& x, const std::vector<double>& y, int m) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw DataError("build_graph: need at least one site");
  if (static_cast<int>(y.size()) != n) throw DataError("build_graph: coordinate length mismatch");
  if (m < 1) throw ConfigError("build_graph: m must be at least 1");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw DataError("build_graph: non-finite coordinate at site " + std::to_string(i));

  NeighborGraph g;
  g.m = m;
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), 0);
  std::sort(g.order.begin(), g.order.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] < x[b];
    if (y[a] != y[b]) return y[a] < y[b];
    return a < b;
  });
  g.rank.resize(n);
  for (int k = 0; k < n; ++k) g.rank[g.order[k]] = k;

  g.neighbors.resize(n);
  g.dist_to.resize(n);
  g.dist_nn.resize(n);
  g.children.resize(n);

  std::vector<std::pair<double, int>> cand;
  for (int k = 0; k < n; ++k) {
    const int i = g.order[k];
    const int take = std::min(k, m);
    cand.clear();
    cand.reserve(k);
    for (int j = 0; j < k; ++j) {
      const int o = g.order[j];
      cand.emplace_back(dist(x[i], y[i], x[o], y[o]), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    auto& nb = g.neighbors[k];
    nb.resize(take);
    g.dist_to[k].resize(take);
    for (int t = 0; t < take; ++t) {
      nb[t] = cand[t].second;
      g.dist_to[k][t] = cand[t].first;
    }
    g.dist_nn[k].resize(take, take);
    for (int a = 0; a < take; ++a) {
      const int oa = g.order[nb[a]];
      g.dist_nn[k](a, a) = 0.0;
      for (int b = a + 1; b < take; ++b) {
        const int ob = g.order[nb[b]];
        double d = dist(x[oa], y[oa], x[ob], y[ob]);
        g.dist_nn[k](a, b) = d;
        g.dist_nn[k](b, a) = d;
      }
    }
    for (int t = 0; t < take; ++t) g.children[nb[t]].emplace_back(k, t);
  }
  return g;
}

ConditionalFactors factorize(const NeighborGraph& graph, const SpatialParams& params) {
  if (!(params.sigma2_w > 0.0) || !(params.phi > 0.0))
    throw NumericError("factorize: spatial parameters must be positive");
  const int n = graph.n();
  ConditionalFactors fac;
  fac.params = params;
  fac.b.resize(n);
  fac.f_corr.resize(n);
  fac.f_abs.resize(n);
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  for (int k = 0; k < n; ++k) {
    const int q = static_cast<int>(graph.neighbors[k].size());
    if (q == 0) {
      fac.b[k].resize(0);
      fac.f_corr[k] = 1.0;
      fac.f_abs[k] = params.sigma2_w;
      continue;
    }
    R = (-params.phi * graph.dist_nn[k].array()).exp().matrix();
    R.diagonal().array() += kJitter;
    r = (-params.phi * graph.dist_to[k].array()).exp().matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success)
      throw NumericError("factorize: singular neighbor covariance at site " + std::to_string(k));
    fac.b[k] = llt.solve(r);
    double fc = 1.0 - fac.b[k].dot(r);
    if (fc < kJitter) fc = kJitter;
    fac.f_corr[k] = fc;
    fac.f_abs[k] = params.sigma2_w * fc;
  }
  return fac;
}

namespace {
double resid(const Eigen::VectorXd& w, const ConditionalFactors& fac,
             const NeighborGraph& g, int k) {
  const auto& nb = g.neighbors[k];
  double mean = 0.0;
  for (std::size_t t = 0; t < nb.size(); ++t)
    mean += fac.b[k][static_cast<Eigen::Index>(t)] * w[g.order[nb[t]]];
  return w[g.order[k]] - mean;
}
}  // namespace

double log_density(const Eigen::VectorXd& w, const ConditionalFactors& factors,
                   const NeighborGraph& graph) {
  const int n = graph.n();
  if (w.size() != n) throw NumericError("log_density: w length mismatch");
  double ld = 0.0;
  for (int k = 0; k < n; ++k) {
    double e = resid(w, factors, graph, k);
    ld += -0.5 * (kLog2Pi + std::log(factors.f_abs[k]) + e * e / factors.f_abs[k]);
  }
  return ld;
}

double corr_quadform(const Eigen::VectorXd& w, const ConditionalFactors& factors,
                     const NeighborGraph& graph) {
  const int n = graph.n();
  if (w.size() != n) throw NumericError("corr_quadform: w length mismatch");
  double q = 0.0;
  for (int k = 0; k < n; ++k) {
    double e = resid(w, factors, graph, k);
    q += e * e / factors.f_corr[k];
  }
  return q;
}

bool sample_phi_mh(SpatialParams& params, ConditionalFactors& factors,
                   const Eigen::VectorXd& w, const NeighborGraph& graph,
                   const PhiPrior& prior, double proposal_sd, Rng& rng) {
  if (!(prior.lower > 0.0) || !(prior.lower < prior.upper))
    throw ConfigError("phi prior requires 0 < lower < upper");
  const double phi_new = std::exp(std::log(params.phi) + proposal_sd * rng.normal());
  if (phi_new < prior.lower || phi_new > prior.upper) return false;
  SpatialParams prop{params.sigma2_w, phi_new};
  ConditionalFactors fac_new = factorize(graph, prop);
  const double log_ratio = log_density(w, fac_new, graph) - log_density(w, factors, graph)
                           + std::log(phi_new) - std::log(params.phi);
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    params = prop;
    factors = std::move(fac_new);
    return true;
  }
  return false;
}

WPredictor::WPredictor(const std::vector<double>& obs_x, const std::vector<double>& obs_y, int m)
    : obs_x_(obs_x), obs_y_(obs_y), m_(std::min<int>(m, static_cast<int>(obs_x.size()))) {
  if (obs_x_.empty()) throw DataError("WPredictor: need at least one observed site");
  if (obs_x_.size() != obs_y_.size())
    throw DataError("WPredictor: coordinate length mismatch");
  if (m < 1) throw ConfigError("WPredictor: m must be at least 1");
}

WPredictor::Site WPredictor::site_for(double x, double y) const {
  const int n = n_obs();
  std::vector<std::pair<double, int>> cand(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cand[i] = {dist(x, y, obs_x_[i], obs_y_[i]), i};
  std::partial_sort(cand.begin(), cand.begin() + m_, cand.end());
  Site s;
  s.nn.resize(m_);
  s.dist.resize(m_);
  for (int t = 0; t < m_; ++t) {
    s.nn[t] = cand[t].second;
    s.dist[t] = cand[t].first;
  }
  s.dist_nn.resize(m_, m_);
  for (int a = 0; a < m_; ++a) {
    s.dist_nn(a, a) = 0.0;
    for (int b = a + 1; b < m_; ++b) {
      double d = dist(obs_x_[s.nn[a]], obs_y_[s.nn[a]], obs_x_[s.nn[b]], obs_y_[s.nn[b]]);
      s.dist_nn(a, b) = d;
      s.dist_nn(b, a) = d;
    }
  }
  return s;
}

void WPredictor::conditional(const Site& site, const SpatialParams& params,
                             const double* w_obs, double& mean, double& var) const {
  const int q = static_cast<int>(site.nn.size());
  Eigen::MatrixXd R = (-params.phi * site.dist_nn.array()).exp().matrix();
  R.diagonal().array() += kJitter;
  Eigen::VectorXd r = (-params.phi * site.dist.array()).exp().matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericError("WPredictor: singular neighbor covariance");
  Eigen::VectorXd b = llt.solve(r);
  mean = 0.0;
  for (int t = 0; t < q; ++t) mean += b[t] * w_obs[site.nn[t]];
  double fc = 1.0 - b.dot(r);
  if (fc < 0.0) fc = 0.0;
  var = params.sigma2_w * fc;
}

Eigen::MatrixXd predict_w(const std::vector<std::pair<double, double>>& new_coords,
                          const std::vector<std::pair<double, double>>& obs_coords,
                          const Eigen::MatrixXd& w_draws,
                          const std::vector<SpatialParams>& params_draws, int m, Rng& rng) {
  const auto M = w_draws.rows();
  if (static_cast<std::size_t>(M) != params_draws.size())
    throw NumericError("predict_w: draw count mismatch");
  if (w_draws.cols() != static_cast<Eigen::Index>(obs_coords.size()))
    throw NumericError("predict_w: w draw width mismatch");
  std::vector<double> ox, oy;
  ox.reserve(obs_coords.size());
  oy.reserve(obs_coords.size());
  for (auto& c : obs_coords) {
    ox.push_back(c.first);
    oy.push_back(c.second);
  }
  WPredictor pred(ox, oy, m);
  Eigen::MatrixXd out(M, static_cast<Eigen::Index>(new_coords.size()));
  std::vector<double> wrow(obs_coords.size());
  for (std::size_t u = 0; u < new_coords.size(); ++u) {
    auto site = pred.site_for(new_coords[u].first, new_coords[u].second);
    for (Eigen::Index s = 0; s < M; ++s) {
      for (Eigen::Index i = 0; i < w_draws.cols(); ++i) wrow[i] = w_draws(s, i);
      double mean, var;
      pred.conditional(site, params_draws[s], wrow.data(), mean, var);
      out(s, static_cast<Eigen::Index>(u)) = mean + std::sqrt(var) * rng.normal();
    }
  }
  return out;
}

}  // namespace sae
