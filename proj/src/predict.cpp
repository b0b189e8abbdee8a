#include "sae/predict.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "sae/errors.hpp"
#include "sae/nngp.hpp"

namespace sae {

namespace {

double logistic(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

double stable_mean(const double* v, std::size_t n) {
  if (n == 0) throw NumericError("stable_mean: empty input");
  struct Pair {
    static double sum(const double* v, std::size_t n) {
      if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
      }
      std::size_t h = n / 2;
      return sum(v, h) + sum(v + h, n - h);
    }
  };
  return Pair::sum(v, n) / static_cast<double>(n);
}

double stable_mean(const std::vector<double>& v) {
  return stable_mean(v.data(), v.size());
}

double quantile_type8(std::vector<double> v, double p) {
  if (v.empty()) throw NumericError("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw NumericError("quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double h = (n + 1.0 / 3.0) * p + 1.0 / 3.0;
  if (h <= 1.0) return v.front();
  if (h >= n) return v.back();
  double fl = std::floor(h);
  std::size_t lo = static_cast<std::size_t>(fl) - 1;
  return v[lo] + (h - fl) * (v[lo + 1] - v[lo]);
}

void summarize(CountyPosterior& cp) {
  const Eigen::Index M = cp.draws.size();
  if (M == 0) throw NumericError("county posterior: no draws");
  cp.mean = stable_mean(cp.draws.data(), static_cast<std::size_t>(M));
  double ss = 0.0;
  for (Eigen::Index s = 0; s < M; ++s) {
    double d = cp.draws[s] - cp.mean;
    ss += d * d;
  }
  cp.sd = M > 1 ? std::sqrt(ss / static_cast<double>(M - 1)) : 0.0;
  std::vector<double> tmp(cp.draws.data(), cp.draws.data() + M);
  cp.q025 = quantile_type8(tmp, 0.025);
  cp.q975 = quantile_type8(std::move(tmp), 0.975);
}

double summarize_point(const CountyPosterior& cp) {
  return stable_mean(cp.draws.data(), static_cast<std::size_t>(cp.draws.size()));
}

CountyPosterior aggregate_county(const std::vector<Eigen::VectorXd>& unit_draws, int county_id) {
  if (unit_draws.empty()) throw DataError("aggregate_county: empty county grid");
  const Eigen::Index M = unit_draws[0].size();
  CountyPosterior cp;
  cp.county_id = county_id;
  cp.draws = Eigen::VectorXd::Zero(M);
  for (const auto& u : unit_draws) {
    if (u.size() != M) throw DataError("aggregate_county: draw count mismatch");
    cp.draws += u;
  }
  cp.draws /= static_cast<double>(unit_draws.size());
  summarize(cp);
  return cp;
}

namespace {

// Shared worker: one unit's M back-transformed posterior-predictive draws.
void predict_unit_draws(const PosteriorDraws& d, const GridUnit& unit,
                        const Transform& transform, const PredictOptions& opts,
                        const WPredictor* wpred, Rng& rng, Eigen::VectorXd& out) {
  const int M = d.M;
  const int j = unit.county_id;
  const bool two_stage = d.spec.two_stage;
  const bool cvc = d.spec.varying_coefficients;
  const bool svi = d.spec.spatial_intercept;
  Eigen::Map<const Eigen::VectorXd> xv(unit.predictors_x.data(),
                                       static_cast<Eigen::Index>(unit.predictors_x.size()));
  Eigen::Map<const Eigen::VectorXd> vv(unit.predictors_v.data(),
                                       static_cast<Eigen::Index>(unit.predictors_v.size()));

  Eigen::VectorXd mean_y = d.beta0 + d.btilde0.col(j);
  if (d.p > 0) mean_y.noalias() += d.beta * xv;
  if (cvc && d.p > 0) mean_y.noalias() += d.btilde.middleCols(j * d.p, d.p) * xv;

  Eigen::VectorXd eta_p;
  if (two_stage) {
    eta_p = d.alpha0 + d.atilde0.col(j);
    if (d.q > 0) eta_p.noalias() += d.alpha * vv;
  }

  WPredictor::Site site;
  if (svi && wpred) site = wpred->site_for(unit.x, unit.y);

  const double tau2_sd0 = std::sqrt(opts.tau2_2);
  out.resize(M);
  for (int s = 0; s < M; ++s) {
    int z = 1;
    if (two_stage) z = rng.bernoulli(logistic(eta_p[s])) ? 1 : 0;
    double y;
    if (z == 0) {
      y = tau2_sd0 * rng.normal();
    } else {
      double m = mean_y[s];
      if (svi && wpred) {
        double wm, wv;
        SpatialParams sp{d.sigma2_w[s], d.phi[s]};
        wpred->conditional(site, sp, d.w.row(s).data(), wm, wv);
        m += wm + std::sqrt(wv) * rng.normal();
      }
      y = m + std::sqrt(d.tau2_at(s, j)) * rng.normal();
    }
    out[s] = transform.naive_inverse(y);
  }
}

}  // namespace

Eigen::VectorXd posterior_predict_unit(const PosteriorDraws& draws, const GridUnit& unit,
                                       const Transform& transform, const PredictOptions& opts,
                                       std::uint64_t unit_index) {
  if (unit.county_id < 0 || unit.county_id >= draws.J)
    throw DataError("posterior_predict_unit: county index out of range");
  if (static_cast<int>(unit.predictors_x.size()) != draws.p ||
      static_cast<int>(unit.predictors_v.size()) != draws.q)
    throw DataError("posterior_predict_unit: predictor length mismatch");
  std::unique_ptr<WPredictor> wpred;
  if (draws.spec.spatial_intercept)
    wpred = std::make_unique<WPredictor>(draws.w_x, draws.w_y, opts.nngp_m);
  Rng rng(derive_seed(opts.seed, "ppd", unit_index));
  Eigen::VectorXd out;
  predict_unit_draws(draws, unit, transform, opts, wpred.get(), rng, out);
  return out;
}

CountyPredictions posterior_predict_counties(const PosteriorDraws& draws, const GridData& grid,
                                             int J, const Transform& transform,
                                             const PredictOptions& opts,
                                             bool want_unit_summaries) {
  const std::size_t n = grid.units.size();
  std::vector<std::vector<std::size_t>> by_county(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < n; ++i) {
    int j = grid.units[i].county_id;
    if (j < 0 || j >= J)
      throw DataError("posterior_predict_counties: unknown county at unit " + std::to_string(i));
    by_county[static_cast<std::size_t>(j)].push_back(i);
  }
  std::unique_ptr<WPredictor> wpred;
  if (draws.spec.spatial_intercept)
    wpred = std::make_unique<WPredictor>(draws.w_x, draws.w_y, opts.nngp_m);

  CountyPredictions result;
  if (want_unit_summaries) result.units.resize(n);
  std::vector<int> present;
  for (int j = 0; j < J; ++j)
    if (!by_county[static_cast<std::size_t>(j)].empty()) present.push_back(j);
  result.counties.resize(present.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < present.size(); ++t) {
    const int j = present[t];
    const auto& units = by_county[static_cast<std::size_t>(j)];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(draws.M);
    Eigen::VectorXd ud;
    for (std::size_t i : units) {
      const GridUnit& unit = grid.units[i];
      Rng rng(derive_seed(opts.seed, "ppd", i));
      predict_unit_draws(draws, unit, transform, opts, wpred.get(), rng, ud);
      acc += ud;
      if (want_unit_summaries) {
        UnitSummary& us = result.units[i];
        us.biomass_mean = stable_mean(ud.data(), static_cast<std::size_t>(ud.size()));
        if (draws.spec.two_stage) {
          Eigen::Map<const Eigen::VectorXd> vv(
              unit.predictors_v.data(), static_cast<Eigen::Index>(unit.predictors_v.size()));
          Eigen::VectorXd eta = draws.alpha0 + draws.atilde0.col(j);
          if (draws.q > 0) eta.noalias() += draws.alpha * vv;
          double pm = 0.0;
          for (int s = 0; s < draws.M; ++s) pm += logistic(eta[s]);
          us.p_mean = pm / draws.M;
        }
      }
    }
    CountyPosterior cp;
    cp.county_id = j;
    cp.draws = acc / static_cast<double>(units.size());
    summarize(cp);
    result.counties[t] = std::move(cp);
  }
  return result;
}

}  // namespace sae
