#include <cmath>
#include <stdexcept>

#include "sae/errors.hpp"
#include "sae/samplers.hpp"

namespace sae {

namespace {

// Sample from N(A^-1 rhs, A^-1) given the precision A.
Eigen::VectorXd sample_mvn_precision(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs,
                                     Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericError("gaussian stage: singular full-conditional precision");
  Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd zvec(rhs.size());
  for (int k = 0; k < zvec.size(); ++k) zvec[k] = rng.normal();
  return mean + llt.matrixU().solve(zvec);
}

}  // namespace

GaussianStageSampler::GaussianStageSampler(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const std::vector<int>& county, int J,
                                           const std::vector<double>& x_km,
                                           const std::vector<double>& y_km,
                                           const GaussianOptions& options, const Priors& priors)
    : X_(X), y_(y), county_(county), J_(J), options_(options), priors_(priors) {
  const int n = static_cast<int>(y_.size());
  if (n == 0) throw DataError("gaussian stage: empty dataset");
  if (X_.rows() != n || static_cast<int>(county_.size()) != n)
    throw DataError("gaussian stage: row count mismatch");
  rows_.resize(J_);
  for (int i = 0; i < n; ++i) rows_[county_[i]].push_back(i);

  const int p = static_cast<int>(X_.cols());
  beta = Eigen::VectorXd::Zero(p);
  btilde0 = Eigen::VectorXd::Zero(J_);
  if (options_.varying_coefficients) {
    btilde = Eigen::MatrixXd::Zero(J_, p);
    sigma2_bk = Eigen::VectorXd::Ones(p);
  }
  if (options_.county_residual_variance) tau1j = Eigen::VectorXd::Ones(J_);
  if (options_.spatial_intercept) {
    if (static_cast<int>(x_km.size()) != n || static_cast<int>(y_km.size()) != n)
      throw DataError("gaussian stage: coordinate length mismatch");
    w = Eigen::VectorXd::Zero(n);
    phi = std::sqrt(priors_.phi_lower * priors_.phi_upper);
    graph_ = build_graph(x_km, y_km, options_.nngp_neighbors);
    factors_ = factorize(graph_, SpatialParams{sigma2_w, phi});
  }
}

double GaussianStageSampler::residual_variance(int row) const {
  return options_.county_residual_variance ? tau1j[county_[row]] : tau2;
}

Eigen::VectorXd GaussianStageSampler::residual_excluding_fixed() const {
  Eigen::VectorXd r = y_;
  for (int i = 0; i < r.size(); ++i) {
    int j = county_[i];
    r[i] -= btilde0[j];
    if (options_.varying_coefficients) r[i] -= X_.row(i).dot(btilde.row(j));
    if (options_.spatial_intercept) r[i] -= w[i];
  }
  return r;
}

Eigen::VectorXd GaussianStageSampler::residual_full() const {
  Eigen::VectorXd r = residual_excluding_fixed();
  r -= X_ * beta;
  r.array() -= beta0;
  return r;
}

void GaussianStageSampler::update_fixed(Rng& rng) {
  const int p = static_cast<int>(X_.cols());
  Eigen::VectorXd r = residual_excluding_fixed();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p + 1, p + 1);
  A.diagonal().array() = 1.0 / priors_.var_fixed;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd d(p + 1);
  for (int i = 0; i < r.size(); ++i) {
    double u = 1.0 / residual_variance(i);
    d[0] = 1.0;
    d.tail(p) = X_.row(i);
    A.noalias() += u * d * d.transpose();
    rhs.noalias() += (u * r[i]) * d;
  }
  Eigen::VectorXd s = sample_mvn_precision(A, rhs, rng);
  beta0 = s[0];
  beta = s.tail(p);
}

void GaussianStageSampler::update_county_intercepts(Rng& rng) {
  Eigen::VectorXd e = y_ - X_ * beta;
  e.array() -= beta0;
  for (int i = 0; i < e.size(); ++i) {
    int j = county_[i];
    if (options_.varying_coefficients) e[i] -= X_.row(i).dot(btilde.row(j));
    if (options_.spatial_intercept) e[i] -= w[i];
  }
  for (int j = 0; j < J_; ++j) {
    if (rows_[j].empty()) {
      btilde0[j] = std::sqrt(sigma2_b0) * rng.normal();
      continue;
    }
    double prec = 1.0 / sigma2_b0;
    double num = 0.0;
    for (int i : rows_[j]) {
      double u = 1.0 / residual_variance(i);
      prec += u;
      num += u * e[i];
    }
    btilde0[j] = num / prec + rng.normal() / std::sqrt(prec);
  }
}

void GaussianStageSampler::update_sigma2_b0(Rng& rng) {
  sigma2_b0 = rng.inv_gamma(priors_.ig_shape + 0.5 * J_,
                            priors_.ig_scale + 0.5 * btilde0.squaredNorm());
}

void GaussianStageSampler::update_county_slopes(Rng& rng) {
  if (!options_.varying_coefficients) return;
  const int p = static_cast<int>(X_.cols());
  Eigen::VectorXd e = y_ - X_ * beta;
  e.array() -= beta0;
  for (int i = 0; i < e.size(); ++i) {
    e[i] -= btilde0[county_[i]];
    if (options_.spatial_intercept) e[i] -= w[i];
  }
  for (int j = 0; j < J_; ++j) {
    if (rows_[j].empty()) {
      for (int k = 0; k < p; ++k) btilde(j, k) = std::sqrt(sigma2_bk[k]) * rng.normal();
      continue;
    }
    Eigen::MatrixXd A = sigma2_bk.cwiseInverse().asDiagonal();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (int i : rows_[j]) {
      double u = 1.0 / residual_variance(i);
      A.noalias() += u * X_.row(i).transpose() * X_.row(i);
      rhs.noalias() += (u * e[i]) * X_.row(i).transpose();
    }
    btilde.row(j) = sample_mvn_precision(A, rhs, rng);
  }
}

void GaussianStageSampler::update_sigma2_bk(Rng& rng) {
  if (!options_.varying_coefficients) return;
  for (int k = 0; k < sigma2_bk.size(); ++k) {
    double ss = btilde.col(k).squaredNorm();
    sigma2_bk[k] = rng.inv_gamma(priors_.ig_shape + 0.5 * J_, priors_.ig_scale + 0.5 * ss);
  }
}

void GaussianStageSampler::update_residual_variance(Rng& rng) {
  Eigen::VectorXd e = residual_full();
  if (!options_.county_residual_variance) {
    tau2 = rng.inv_gamma(priors_.ig_shape + 0.5 * e.size(),
                         priors_.ig_scale + 0.5 * e.squaredNorm());
    return;
  }
  for (int j = 0; j < J_; ++j) {
    double ss = 0.0;
    for (int i : rows_[j]) ss += e[i] * e[i];
    tau1j[j] = rng.inv_gamma(priors_.ig_shape + 0.5 * rows_[j].size(),
                             priors_.ig_scale + 0.5 * ss);
  }
}

void GaussianStageSampler::update_w(Rng& rng) {
  if (!options_.spatial_intercept) return;
  Eigen::VectorXd d = y_ - X_ * beta;
  d.array() -= beta0;
  for (int i = 0; i < d.size(); ++i) {
    int j = county_[i];
    d[i] -= btilde0[j];
    if (options_.varying_coefficients) d[i] -= X_.row(i).dot(btilde.row(j));
  }
  const int n = graph_.n();
  for (int k = 0; k < n; ++k) {
    const int i = graph_.order[k];
    double prec = 1.0 / factors_.f_abs[k];
    double prior_mean = 0.0;
    const auto& nb = graph_.neighbors[k];
    for (std::size_t t = 0; t < nb.size(); ++t)
      prior_mean += factors_.b[k][static_cast<Eigen::Index>(t)] * w[graph_.order[nb[t]]];
    double num = prior_mean / factors_.f_abs[k];
    for (const auto& [c, t] : graph_.children[k]) {
      double bct = factors_.b[c][t];
      const auto& nbc = graph_.neighbors[c];
      double others = 0.0;
      for (std::size_t t2 = 0; t2 < nbc.size(); ++t2)
        if (static_cast<int>(t2) != t)
          others += factors_.b[c][static_cast<Eigen::Index>(t2)] * w[graph_.order[nbc[t2]]];
      double a_ct = w[graph_.order[c]] - others;
      prec += bct * bct / factors_.f_abs[c];
      num += bct * a_ct / factors_.f_abs[c];
    }
    double u = 1.0 / residual_variance(i);
    prec += u;
    num += u * d[i];
    w[i] = num / prec + rng.normal() / std::sqrt(prec);
  }
}

void GaussianStageSampler::update_sigma2_w(Rng& rng) {
  if (!options_.spatial_intercept) return;
  double quad = corr_quadform(w, factors_, graph_);
  sigma2_w = rng.inv_gamma(priors_.ig_shape + 0.5 * graph_.n(),
                           priors_.ig_scale + 0.5 * quad);
  factors_.params.sigma2_w = sigma2_w;
  for (int k = 0; k < graph_.n(); ++k) factors_.f_abs[k] = sigma2_w * factors_.f_corr[k];
}

void GaussianStageSampler::update_phi(Rng& rng, bool adapt) {
  if (!options_.spatial_intercept) return;
  SpatialParams params{sigma2_w, phi};
  PhiPrior prior{priors_.phi_lower, priors_.phi_upper};
  bool acc = sample_phi_mh(params, factors_, w, graph_, prior, phi_sd_, rng);
  phi = params.phi;
  phi_tries_ += 1;
  phi_batch_tries_ += 1;
  if (acc) {
    phi_acc_ += 1;
    phi_batch_acc_ += 1;
  }
  if (adapt && phi_batch_tries_ >= 50) {
    phi_batch_index_ += 1;
    double rate = static_cast<double>(phi_batch_acc_) / static_cast<double>(phi_batch_tries_);
    double step = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(phi_batch_index_)));
    phi_sd_ *= std::exp(rate > 0.43 ? step : -step);
    phi_batch_tries_ = phi_batch_acc_ = 0;
  }
}

void GaussianStageSampler::iterate(Rng& rng, bool adapt) {
  update_fixed(rng);
  update_county_intercepts(rng);
  update_sigma2_b0(rng);
  update_county_slopes(rng);
  update_sigma2_bk(rng);
  update_w(rng);
  update_sigma2_w(rng);
  update_phi(rng, adapt);
  update_residual_variance(rng);
}

void GaussianStageSampler::set_phi(double new_phi) {
  if (!options_.spatial_intercept) return;
  if (new_phi < priors_.phi_lower) new_phi = priors_.phi_lower;
  if (new_phi > priors_.phi_upper) new_phi = priors_.phi_upper;
  phi = new_phi;
  factors_ = factorize(graph_, SpatialParams{sigma2_w, phi});
}

void GaussianStageSampler::set_response(const Eigen::VectorXd& y) {
  if (y.size() != y_.size()) throw std::invalid_argument("set_response: length mismatch");
  y_ = y;
}

double GaussianStageSampler::accept_rate_phi() const {
  return phi_tries_ ? static_cast<double>(phi_acc_) / static_cast<double>(phi_tries_) : 0.0;
}

}  // namespace sae
