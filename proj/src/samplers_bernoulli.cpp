#include <cmath>

#include "sae/errors.hpp"
#include "sae/samplers.hpp"

namespace sae {

namespace {
double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
}  // namespace

BernoulliStageSampler::BernoulliStageSampler(const Eigen::MatrixXd& V,
                                             const std::vector<int>& z,
                                             const std::vector<int>& county, int J,
                                             const Priors& priors)
    : V_(V), z_(z), county_(county), J_(J), priors_(priors) {
  const int n = static_cast<int>(z_.size());
  if (n == 0) throw DataError("bernoulli stage: empty dataset");
  if (V_.rows() != n || static_cast<int>(county_.size()) != n)
    throw DataError("bernoulli stage: row count mismatch");
  int ones = 0;
  for (int zi : z_) {
    if (zi != 0 && zi != 1) throw DataError("bernoulli stage: z must be binary");
    ones += zi;
  }
  if (ones == 0 || ones == n)
    throw DataError("bernoulli stage: z needs both classes");
  rows_.resize(J_);
  for (int i = 0; i < n; ++i) rows_[county_[i]].push_back(i);

  const int q = static_cast<int>(V_.cols());
  alpha = Eigen::VectorXd::Zero(q);
  atilde0 = Eigen::VectorXd::Zero(J_);
  run_mean_ = Eigen::VectorXd::Zero(q + 1);
  run_m2_ = Eigen::VectorXd::Constant(q + 1, 0.01);
  county_sd_.assign(J_, 0.5);
  county_batch_tries_.assign(J_, 0);
  county_batch_acc_.assign(J_, 0);
  refresh_eta();
}

void BernoulliStageSampler::refresh_eta() {
  eta_ = V_ * alpha;
  for (int i = 0; i < eta_.size(); ++i) eta_[i] += alpha0 + atilde0[county_[i]];
}

double BernoulliStageSampler::log_lik_joint(double a0, const Eigen::VectorXd& a) const {
  Eigen::VectorXd eta = V_ * a;
  double ll = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    double e = eta[i] + a0 + atilde0[county_[i]];
    ll += z_[i] * e - log1p_exp(e);
  }
  ll -= 0.5 * (a0 * a0 + a.squaredNorm()) / priors_.var_fixed;
  return ll;
}

double BernoulliStageSampler::log_lik_county(int j, double aj) const {
  double ll = 0.0;
  for (int i : rows_[j]) {
    double e = eta_[i] - atilde0[j] + aj;
    ll += z_[i] * e - log1p_exp(e);
  }
  ll -= 0.5 * aj * aj / sigma2_a0;
  return ll;
}

void BernoulliStageSampler::update_joint_block(Rng& rng, bool adapt) {
  const int q = static_cast<int>(alpha.size());
  Eigen::VectorXd cur(q + 1);
  cur[0] = alpha0;
  cur.tail(q) = alpha;

  if (adapt) {
    run_n_ += 1;
    Eigen::VectorXd delta = cur - run_mean_;
    run_mean_ += delta / static_cast<double>(run_n_);
    run_m2_ += delta.cwiseProduct(cur - run_mean_);
  }
  Eigen::VectorXd sd(q + 1);
  for (int k = 0; k <= q; ++k) {
    double var = run_n_ > 1 ? run_m2_[k] / static_cast<double>(run_n_ - 1) : 0.01;
    sd[k] = joint_scale_ * std::sqrt(var + 1e-4);
  }

  Eigen::VectorXd prop = cur;
  for (int k = 0; k <= q; ++k) prop[k] += sd[k] * rng.normal();
  double lr = log_lik_joint(prop[0], prop.tail(q)) - log_lik_joint(cur[0], cur.tail(q));
  joint_tries_ += 1;
  joint_batch_tries_ += 1;
  if (lr >= 0.0 || std::log(rng.uniform()) < lr) {
    alpha0 = prop[0];
    alpha = prop.tail(q);
    refresh_eta();
    joint_acc_ += 1;
    joint_batch_acc_ += 1;
  }

  if (!separation_warned_ &&
      (std::abs(alpha0) > 30.0 || (q > 0 && alpha.cwiseAbs().maxCoeff() > 30.0))) {
    warn("bernoulli stage: separation suspected, proper priors keep the posterior finite");
    separation_warned_ = true;
  }

  if (adapt && joint_batch_tries_ >= 50) {
    batch_index_ += 1;
    double rate = static_cast<double>(joint_batch_acc_) / static_cast<double>(joint_batch_tries_);
    double step = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batch_index_)));
    joint_scale_ *= std::exp(rate > 0.23 ? step : -step);
    joint_batch_tries_ = joint_batch_acc_ = 0;
  }
}

void BernoulliStageSampler::update_county_intercepts(Rng& rng, bool adapt) {
  for (int j = 0; j < J_; ++j) {
    if (rows_[j].empty()) {
      atilde0[j] = std::sqrt(sigma2_a0) * rng.normal();
      continue;
    }
    double prop = atilde0[j] + county_sd_[j] * rng.normal();
    double lr = log_lik_county(j, prop) - log_lik_county(j, atilde0[j]);
    county_tries_ += 1;
    county_batch_tries_[j] += 1;
    if (lr >= 0.0 || std::log(rng.uniform()) < lr) {
      double old = atilde0[j];
      atilde0[j] = prop;
      for (int i : rows_[j]) eta_[i] += prop - old;
      county_acc_ += 1;
      county_batch_acc_[j] += 1;
    }
    if (adapt && county_batch_tries_[j] >= 50) {
      double rate = static_cast<double>(county_batch_acc_[j]) /
                    static_cast<double>(county_batch_tries_[j]);
      double step = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batch_index_ + 1)));
      county_sd_[j] *= std::exp(rate > 0.43 ? step : -step);
      county_batch_tries_[j] = county_batch_acc_[j] = 0;
    }
  }
}

void BernoulliStageSampler::update_sigma2_a0(Rng& rng) {
  double ss = atilde0.squaredNorm();
  sigma2_a0 = rng.inv_gamma(priors_.ig_shape + 0.5 * J_, priors_.ig_scale + 0.5 * ss);
}

void BernoulliStageSampler::iterate(Rng& rng, bool adapt) {
  update_joint_block(rng, adapt);
  update_county_intercepts(rng, adapt);
  update_sigma2_a0(rng);
}

double BernoulliStageSampler::accept_rate_joint() const {
  return joint_tries_ ? static_cast<double>(joint_acc_) / static_cast<double>(joint_tries_) : 0.0;
}

double BernoulliStageSampler::accept_rate_county() const {
  return county_tries_ ? static_cast<double>(county_acc_) / static_cast<double>(county_tries_)
                       : 0.0;
}

}  // namespace sae
