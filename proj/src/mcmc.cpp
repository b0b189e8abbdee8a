#include "sae/mcmc.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "sae/csv.hpp"
#include "sae/errors.hpp"
#include "sae/samplers.hpp"
#include "sae/transforms.hpp"

namespace sae {

void Priors::validate() const {
  if (!(var_fixed > 0.0) || !(ig_shape > 0.0) || !(ig_scale > 0.0) || !(tau2_2 > 0.0))
    throw ConfigError("priors: variances and IG hyperparameters must be positive");
  if (!(phi_lower > 0.0) || !(phi_lower < phi_upper))
    throw ConfigError("priors: need 0 < phi_lower < phi_upper");
}

void McmcConfig::validate() const {
  if (chains < 1) throw ConfigError("mcmc: chains must be at least 1");
  if (thin < 1) throw ConfigError("mcmc: thin must be at least 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw ConfigError("mcmc: need 0 <= burn_in < iterations");
  if (retained_per_chain() < 1) throw ConfigError("mcmc: no retained draws");
  if (!chain_seeds.empty()) {
    if (static_cast<int>(chain_seeds.size()) != chains)
      throw ConfigError("mcmc: chain_seeds length must equal chains");
    std::set<std::uint64_t> uniq(chain_seeds.begin(), chain_seeds.end());
    if (static_cast<int>(uniq.size()) != chains)
      throw ConfigError("mcmc: chain seeds must be distinct");
  }
}

void FitData::validate() const {
  const int nn = n();
  if (nn == 0) throw DataError("fit: empty dataset");
  if (X.rows() != nn || V.rows() != nn || y_t.size() != nn ||
      static_cast<int>(z.size()) != nn || static_cast<int>(x_km.size()) != nn ||
      static_cast<int>(y_km.size()) != nn)
    throw DataError("fit: row count mismatch across columns");
  if (J < 1) throw DataError("fit: no counties registered");
  for (int j : county)
    if (j < 0 || j >= J) throw DataError("fit: county index out of range");
}

double psrf(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) throw ConfigError("psrf: need at least 2 chains");
  for (const auto& c : chains)
    if (c.size() < 10) throw ConfigError("psrf: need at least 10 draws per chain");
  std::vector<Eigen::VectorXd> halves;
  const Eigen::Index n2 = chains[0].size() / 2;
  for (const auto& c : chains) {
    if (c.size() != chains[0].size())
      throw ConfigError("psrf: chains must have equal length");
    halves.push_back(c.head(n2));
    halves.push_back(c.tail(n2));
  }
  const double m = static_cast<double>(halves.size());
  const double n = static_cast<double>(n2);
  std::vector<double> means;
  double W = 0.0;
  for (const auto& h : halves) {
    double mu = h.mean();
    means.push_back(mu);
    W += (h.array() - mu).square().sum() / (n - 1.0);
  }
  W /= m;
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double var_means = 0.0;
  for (double mu : means) var_means += (mu - grand) * (mu - grand);
  var_means /= (m - 1.0);
  const double B = n * var_means;
  if (W <= 0.0) return B <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

namespace {

PosteriorDraws alloc_draws(const ModelSpec& spec, int M, int J, int p, int q, int n_w) {
  PosteriorDraws d;
  d.spec = spec;
  d.M = M;
  d.J = J;
  d.p = p;
  d.q = q;
  const bool two_stage = spec.two_stage;
  const bool cvc = spec.varying_coefficients;
  const bool crv = spec.county_residual_variance;
  const bool svi = spec.spatial_intercept;
  if (two_stage) {
    d.alpha0.resize(M);
    d.alpha.resize(M, q);
    d.atilde0.resize(M, J);
    d.sigma2_a0.resize(M);
  }
  d.beta0.resize(M);
  d.beta.resize(M, p);
  d.btilde0.resize(M, J);
  d.sigma2_b0.resize(M);
  if (cvc) {
    d.btilde.resize(M, J * p);
    d.sigma2_bk.resize(M, p);
  }
  d.tau2.resize(M, crv ? J : 1);
  if (svi) {
    d.sigma2_w.resize(M);
    d.phi.resize(M);
    d.w.resize(M, n_w);
  }
  return d;
}

void record_draw(PosteriorDraws& d, int s, const BernoulliStageSampler* bern,
                 const GaussianStageSampler& gauss) {
  if (bern) {
    d.alpha0[s] = bern->alpha0;
    d.alpha.row(s) = bern->alpha;
    d.atilde0.row(s) = bern->atilde0;
    d.sigma2_a0[s] = bern->sigma2_a0;
  }
  d.beta0[s] = gauss.beta0;
  d.beta.row(s) = gauss.beta;
  d.btilde0.row(s) = gauss.btilde0;
  d.sigma2_b0[s] = gauss.sigma2_b0;
  if (d.spec.varying_coefficients) {
    for (int j = 0; j < d.J; ++j)
      for (int k = 0; k < d.p; ++k) d.btilde(s, j * d.p + k) = gauss.btilde(j, k);
    d.sigma2_bk.row(s) = gauss.sigma2_bk;
  }
  if (d.spec.county_residual_variance) {
    d.tau2.row(s) = gauss.tau1j;
  } else {
    d.tau2(s, 0) = gauss.tau2;
  }
  if (d.spec.spatial_intercept) {
    d.sigma2_w[s] = gauss.sigma2_w;
    d.phi[s] = gauss.phi;
    d.w.row(s) = gauss.w;
  }
}

PosteriorDraws concat_chains(const std::vector<PosteriorDraws>& parts) {
  PosteriorDraws out = parts[0];
  int M = 0;
  for (const auto& c : parts) M += c.M;
  auto cat_vec = [&](Eigen::VectorXd PosteriorDraws::*f) {
    if ((parts[0].*f).size() == 0) return;
    Eigen::VectorXd v(M);
    int at = 0;
    for (const auto& c : parts) {
      v.segment(at, c.M) = c.*f;
      at += c.M;
    }
    out.*f = v;
  };
  auto cat_mat = [&](Eigen::MatrixXd PosteriorDraws::*f) {
    if ((parts[0].*f).rows() == 0) return;
    Eigen::MatrixXd v(M, (parts[0].*f).cols());
    int at = 0;
    for (const auto& c : parts) {
      v.middleRows(at, c.M) = c.*f;
      at += c.M;
    }
    out.*f = v;
  };
  cat_vec(&PosteriorDraws::alpha0);
  cat_mat(&PosteriorDraws::alpha);
  cat_mat(&PosteriorDraws::atilde0);
  cat_vec(&PosteriorDraws::sigma2_a0);
  cat_vec(&PosteriorDraws::beta0);
  cat_mat(&PosteriorDraws::beta);
  cat_mat(&PosteriorDraws::btilde0);
  cat_vec(&PosteriorDraws::sigma2_b0);
  cat_mat(&PosteriorDraws::btilde);
  cat_mat(&PosteriorDraws::sigma2_bk);
  cat_mat(&PosteriorDraws::tau2);
  cat_vec(&PosteriorDraws::sigma2_w);
  cat_vec(&PosteriorDraws::phi);
  cat_mat(&PosteriorDraws::w);
  out.M = M;
  return out;
}

}  // namespace

std::vector<std::string> param_names(const PosteriorDraws& d) {
  std::vector<std::string> names;
  auto idx = [](const std::string& base, int i) { return base + "[" + std::to_string(i) + "]"; };
  if (d.spec.two_stage) {
    names.push_back("alpha0");
    for (int k = 0; k < d.q; ++k) names.push_back(idx("alpha", k));
    for (int j = 0; j < d.J; ++j) names.push_back(idx("atilde0", j));
    names.push_back("sigma2_a0");
  }
  names.push_back("beta0");
  for (int k = 0; k < d.p; ++k) names.push_back(idx("beta", k));
  for (int j = 0; j < d.J; ++j) names.push_back(idx("btilde0", j));
  names.push_back("sigma2_b0");
  if (d.spec.varying_coefficients) {
    for (int j = 0; j < d.J; ++j)
      for (int k = 0; k < d.p; ++k)
        names.push_back("btilde[" + std::to_string(j) + "][" + std::to_string(k) + "]");
    for (int k = 0; k < d.p; ++k) names.push_back(idx("sigma2_bk", k));
  }
  if (d.spec.county_residual_variance) {
    for (int j = 0; j < d.J; ++j) names.push_back(idx("tau1j", j));
  } else {
    names.push_back("tau2");
  }
  if (d.spec.spatial_intercept) {
    names.push_back("sigma2_w");
    names.push_back("phi");
  }
  return names;
}

Eigen::MatrixXd param_matrix(const PosteriorDraws& d) {
  const auto names = param_names(d);
  Eigen::MatrixXd out(d.M, static_cast<Eigen::Index>(names.size()));
  Eigen::Index c = 0;
  auto put_vec = [&](const Eigen::VectorXd& v) { out.col(c++) = v; };
  auto put_mat = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out.col(c++) = m.col(k);
  };
  if (d.spec.two_stage) {
    put_vec(d.alpha0);
    put_mat(d.alpha);
    put_mat(d.atilde0);
    put_vec(d.sigma2_a0);
  }
  put_vec(d.beta0);
  put_mat(d.beta);
  put_mat(d.btilde0);
  put_vec(d.sigma2_b0);
  if (d.spec.varying_coefficients) {
    for (int j = 0; j < d.J; ++j)
      for (int k = 0; k < d.p; ++k) out.col(c++) = d.btilde.col(j * d.p + k);
    put_mat(d.sigma2_bk);
  }
  put_mat(d.tau2);
  if (d.spec.spatial_intercept) {
    put_vec(d.sigma2_w);
    put_vec(d.phi);
  }
  return out;
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  csv::Writer out(path);
  auto names = param_names(draws);
  out.write_row(names);
  Eigen::MatrixXd m = param_matrix(draws);
  std::vector<std::string> row(names.size());
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      row[static_cast<std::size_t>(k)] = csv::format_double(m(s, k));
    out.write_row(row);
  }
}

FitData make_fit_data(const PlotData& plots, const CountyTable& counties, int root) {
  Transform tr = make_transform(root);
  FitData d;
  d.X = design_x(plots.records);
  d.V = design_v(plots.records);
  const int n = static_cast<int>(plots.records.size());
  d.y_t.resize(n);
  d.county.reserve(n);
  d.x_km.reserve(n);
  d.y_km.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = plots.records[static_cast<std::size_t>(i)];
    d.y_t[i] = tr.forward(r.biomass);
    d.county.push_back(r.county_id);
    d.x_km.push_back(r.x);
    d.y_km.push_back(r.y);
  }
  d.z = derive_presence(plots.records);
  d.J = counties.size();
  return d;
}

FitResult run_chains(const ModelSpec& spec, const FitData& data, const Priors& priors,
                     const McmcConfig& config) {
  spec.validate();
  priors.validate();
  config.validate();
  data.validate();

  std::vector<std::uint64_t> seeds = config.chain_seeds;
  if (seeds.empty())
    for (int c = 0; c < config.chains; ++c) seeds.push_back(derive_seed(config.seed, "chain", c));

  const bool two_stage = spec.two_stage;
  const int n = data.n();
  std::vector<int> grows;  // continuous-stage rows
  for (int i = 0; i < n; ++i)
    if (!two_stage || data.z[i] == 1) grows.push_back(i);
  if (grows.empty()) throw DataError("fit: continuous stage has no rows");

  const int p = static_cast<int>(data.X.cols());
  const int q = static_cast<int>(data.V.cols());
  const int ng = static_cast<int>(grows.size());
  Eigen::MatrixXd Xg(ng, p);
  Eigen::VectorXd yg(ng);
  std::vector<int> cg(grows.size());
  std::vector<double> gx(grows.size()), gy(grows.size());
  for (int t = 0; t < ng; ++t) {
    int i = grows[t];
    Xg.row(t) = data.X.row(i);
    yg[t] = data.y_t[i];
    cg[t] = data.county[i];
    gx[t] = data.x_km[i];
    gy[t] = data.y_km[i];
  }

  GaussianOptions gopt;
  gopt.varying_coefficients = spec.varying_coefficients;
  gopt.county_residual_variance = spec.county_residual_variance;
  gopt.spatial_intercept = spec.spatial_intercept;
  gopt.nngp_neighbors = spec.nngp_neighbors;

  const int retained = config.retained_per_chain();
  std::vector<PosteriorDraws> chain_draws;
  double acc_phi = 0.0, acc_joint = 0.0, acc_county = 0.0;

  for (int c = 0; c < config.chains; ++c) {
    Rng rng(seeds[c]);
    std::unique_ptr<BernoulliStageSampler> bern;
    if (two_stage)
      bern = std::make_unique<BernoulliStageSampler>(data.V, data.z, data.county, data.J, priors);
    GaussianStageSampler gauss(Xg, yg, cg, data.J, gx, gy, gopt, priors);

    // overdispersed starts
    if (bern) {
      bern->alpha0 = 0.5 * rng.normal();
      for (int k = 0; k < q; ++k) bern->alpha[k] = 0.5 * rng.normal();
    }
    gauss.beta0 = yg.mean() + 0.5 * rng.normal();
    for (int k = 0; k < p; ++k) gauss.beta[k] = 0.5 * rng.normal();
    if (spec.spatial_intercept)
      gauss.set_phi(std::exp(std::log(std::sqrt(priors.phi_lower * priors.phi_upper)) +
                             0.3 * rng.normal()));

    PosteriorDraws draws = alloc_draws(spec, retained, data.J, p, q, ng);
    int s = 0;
    for (int t = 1; t <= config.iterations; ++t) {
      const bool adapting = t <= config.burn_in;
      if (bern) bern->iterate(rng, adapting);
      gauss.iterate(rng, adapting);
      if (t > config.burn_in && (t - config.burn_in) % config.thin == 0 && s < retained)
        record_draw(draws, s++, bern.get(), gauss);
    }
    if (spec.spatial_intercept) acc_phi += gauss.accept_rate_phi();
    if (bern) {
      acc_joint += bern->accept_rate_joint();
      acc_county += bern->accept_rate_county();
    }
    chain_draws.push_back(std::move(draws));
  }

  FitResult result;
  result.draws = concat_chains(chain_draws);
  result.draws.w_x = gx;
  result.draws.w_y = gy;

  ChainDiagnostics& diag = result.diagnostics;
  diag.accept_phi = acc_phi / config.chains;
  diag.accept_alpha_block = acc_joint / config.chains;
  diag.accept_atilde0 = acc_county / config.chains;
  if (config.chains >= 2 && retained >= 10) {
    auto names = param_names(result.draws);
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& cd : chain_draws) mats.push_back(param_matrix(cd));
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::vector<Eigen::VectorXd> per_chain;
      for (const auto& m : mats) per_chain.push_back(m.col(static_cast<Eigen::Index>(k)));
      double r = psrf(per_chain);
      diag.psrf[names[k]] = r;
      if (r > diag.max_psrf) diag.max_psrf = r;
    }
    diag.converged = diag.max_psrf <= config.psrf_threshold;
  }
  return result;
}

}  // namespace sae
