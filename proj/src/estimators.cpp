#include "sae/estimators.hpp"

#include <cmath>

#include "sae/errors.hpp"
#include "sae/transforms.hpp"

namespace sae {

FittedEstimator fit_estimator(const EstimatorConfig& cfg, const PlotData& sample, int J) {
  cfg.spec.validate();
  FittedEstimator out;
  out.cfg = cfg;
  out.J = J;

  FitData data;
  {
    Transform tr = make_transform(cfg.root);
    data.X = design_x(sample.records);
    data.V = design_v(sample.records);
    const int n = static_cast<int>(sample.records.size());
    data.y_t.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto& r = sample.records[static_cast<std::size_t>(i)];
      data.y_t[i] = tr.forward(r.biomass);
      data.county.push_back(r.county_id);
      data.x_km.push_back(r.x);
      data.y_km.push_back(r.y);
    }
    data.z = derive_presence(sample.records);
    data.J = J;
  }

  if (cfg.spec.paradigm == Paradigm::bayesian) {
    McmcConfig mc = cfg.mcmc;
    mc.seed = cfg.seed;
    out.bayes = run_chains(cfg.spec, data, cfg.priors, mc);
    return out;
  }

  std::vector<int> pos;
  for (int i = 0; i < data.n(); ++i)
    if (data.z[i] == 1) pos.push_back(i);
  Eigen::MatrixXd Xp(static_cast<Eigen::Index>(pos.size()), data.X.cols());
  Eigen::VectorXd yp(static_cast<Eigen::Index>(pos.size()));
  std::vector<int> cp;
  for (std::size_t t = 0; t < pos.size(); ++t) {
    Xp.row(static_cast<Eigen::Index>(t)) = data.X.row(pos[t]);
    yp[static_cast<Eigen::Index>(t)] = data.y_t[pos[t]];
    cp.push_back(data.county[pos[t]]);
  }
  out.lmm = fit_lmm_reml(yp, Xp, cp, J);
  out.glmm = fit_bernoulli_glmm_laplace(data.z, data.V, data.county, J);
  out.sample.X = std::move(data.X);
  out.sample.V = std::move(data.V);
  out.sample.county = std::move(data.county);
  out.sample.J = J;
  return out;
}

EstimatorResult estimate_counties(const FittedEstimator& fit, const GridData& grid) {
  EstimatorResult result;
  Transform tr = make_transform(fit.cfg.root);

  if (fit.bayes) {
    PredictOptions opts;
    opts.nngp_m = fit.cfg.predict_m;
    opts.tau2_2 = fit.cfg.priors.tau2_2;
    opts.seed = derive_seed(fit.cfg.seed, "predict", 0);
    auto preds = posterior_predict_counties(fit.bayes->draws, grid, fit.J, tr, opts);
    for (const auto& cp : preds.counties) {
      CountyEstimate ce;
      ce.county_id = cp.county_id;
      ce.estimate = cp.mean;
      ce.rmse_hat = cp.sd;
      ce.lo = cp.q025;
      ce.hi = cp.q975;
      result.counties.push_back(ce);
    }
    result.diagnostics = fit.bayes->diagnostics;
    result.converged = fit.bayes->diagnostics.converged;
    return result;
  }

  GridMatrices gm = grid_matrices(grid, fit.J);
  auto units = predict_units(*fit.lmm, *fit.glmm, gm, tr);
  std::vector<int> present;
  for (int j = 0; j < fit.J; ++j)
    if (!gm.county_units[j].empty()) present.push_back(j);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(fit.J);
  for (int j : present) {
    double acc = 0.0;
    for (int i : gm.county_units[j]) acc += units[static_cast<std::size_t>(i)].product;
    mu[j] = acc / static_cast<double>(gm.county_units[j].size());
  }
  BootstrapMse mse = bootstrap_mse(*fit.lmm, *fit.glmm, fit.sample, gm, tr,
                                   fit.cfg.bootstrap_B, derive_seed(fit.cfg.seed, "mse", 0));
  result.bootstrap_failures = mse.failures;
  for (int j : present) {
    CountyEstimate ce;
    ce.county_id = j;
    ce.estimate = mu[j];
    ce.rmse_hat = mse.rmse_hat[j];
    ce.lo = mu[j] - 1.96 * mse.rmse_hat[j];
    ce.hi = mu[j] + 1.96 * mse.rmse_hat[j];
    result.counties.push_back(ce);
  }
  return result;
}

std::vector<UnitCvPrediction> predict_holdout(const FittedEstimator& fit,
                                              const GridData& holdout) {
  Transform tr = make_transform(fit.cfg.root);
  std::vector<UnitCvPrediction> out(holdout.units.size());

  if (fit.bayes) {
    PredictOptions opts;
    opts.nngp_m = fit.cfg.predict_m;
    opts.tau2_2 = fit.cfg.priors.tau2_2;
    opts.seed = derive_seed(fit.cfg.seed, "holdout", 0);
    for (std::size_t i = 0; i < holdout.units.size(); ++i) {
      Eigen::VectorXd draws =
          posterior_predict_unit(fit.bayes->draws, holdout.units[i], tr, opts, i);
      UnitCvPrediction& u = out[i];
      u.point = stable_mean(draws.data(), static_cast<std::size_t>(draws.size()));
      std::vector<double> tmp(draws.data(), draws.data() + draws.size());
      u.lo = quantile_type8(tmp, 0.025);
      u.hi = quantile_type8(std::move(tmp), 0.975);
      u.has_interval = true;
    }
    return out;
  }

  GridMatrices gm = grid_matrices(holdout, fit.J);
  auto units = predict_units(*fit.lmm, *fit.glmm, gm, tr);
  for (std::size_t i = 0; i < units.size(); ++i) {
    out[i].point = units[i].product;
    out[i].has_interval = false;
  }
  return out;
}

}  // namespace sae
