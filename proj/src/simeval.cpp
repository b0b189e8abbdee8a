#include "sae/simeval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "sae/errors.hpp"
#include "sae/predict.hpp"
#include "sae/rng.hpp"

namespace sae {

namespace {

std::vector<double> feature_of(const std::vector<double>& px, const std::vector<double>& pv) {
  std::vector<double> f;
  f.reserve(px.size() + pv.size());
  f.insert(f.end(), px.begin(), px.end());
  f.insert(f.end(), pv.begin(), pv.end());
  return f;
}

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

SimPopulation generate_population(const GridData& pixels, const PlotData& donors,
                                  const std::vector<std::string>& pixel_strata,
                                  const std::vector<std::string>& donor_strata, int k, int J,
                                  std::uint64_t seed) {
  const std::size_t n_px = pixels.units.size();
  const std::size_t n_dn = donors.records.size();
  if (k < 1) throw ConfigError("generate_population: k must be at least 1");
  if (pixel_strata.size() != n_px || donor_strata.size() != n_dn)
    throw DataError("generate_population: stratum label length mismatch");
  if (n_dn == 0) throw DataError("generate_population: no donors");

  std::vector<std::vector<double>> donor_feat(n_dn), pixel_feat(n_px);
  for (std::size_t i = 0; i < n_dn; ++i)
    donor_feat[i] = feature_of(donors.records[i].predictors_x, donors.records[i].predictors_v);
  for (std::size_t i = 0; i < n_px; ++i)
    pixel_feat[i] = feature_of(pixels.units[i].predictors_x, pixels.units[i].predictors_v);

  // stratum pools with bootstrap inclusion weights, one resample per stratum
  std::map<std::string, std::vector<std::size_t>> stratum_donors;
  for (std::size_t i = 0; i < n_dn; ++i) stratum_donors[donor_strata[i]].push_back(i);
  struct Pool {
    std::vector<std::size_t> donors;
    std::vector<double> weights;
    bool truncated_warned = false;
  };
  std::map<std::string, Pool> pools;
  std::size_t stratum_index = 0;
  for (auto& [label, ids] : stratum_donors) {
    Rng rng(derive_seed(seed, "bootwt", stratum_index++));
    std::vector<int> counts(ids.size(), 0);
    for (std::size_t t = 0; t < ids.size(); ++t)
      counts[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(ids.size())))] += 1;
    Pool pool;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (counts[t] > 0) {
        pool.donors.push_back(ids[t]);
        pool.weights.push_back(static_cast<double>(counts[t]));
      }
    }
    pools.emplace(label, std::move(pool));
  }

  SimPopulation pop;
  pop.pixels = pixels;
  pop.J = J;
  pop.biomass.assign(n_px, 0.0);
  std::set<std::string> warned;
  for (const auto& label : pixel_strata) {
    auto it = pools.find(label);
    if (it == pools.end() || it->second.donors.empty())
      throw DataError("generate_population: stratum '" + label + "' has no donors");
  }
  for (auto& [label, pool] : pools) {
    if (static_cast<int>(pool.donors.size()) < k)
      warn("generate_population: stratum '" + label + "' has " +
           std::to_string(pool.donors.size()) + " weighted donors, truncating k");
  }

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n_px; ++i) {
    const Pool& pool = pools.at(pixel_strata[i]);
    const int k_eff = std::min<int>(k, static_cast<int>(pool.donors.size()));
    std::vector<std::pair<double, std::size_t>> cand(pool.donors.size());
    for (std::size_t t = 0; t < pool.donors.size(); ++t)
      cand[t] = {sqdist(pixel_feat[i], donor_feat[pool.donors[t]]), pool.donors[t]};
    std::partial_sort(cand.begin(), cand.begin() + k_eff, cand.end());
    Rng rng(derive_seed(seed, "impute", i));
    double total = 0.0;
    for (int t = 0; t < k_eff; ++t) {
      // weights are keyed by pool position; recover it
      total += pool.weights[static_cast<std::size_t>(
          std::lower_bound(pool.donors.begin(), pool.donors.end(), cand[t].second) -
          pool.donors.begin())];
    }
    double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = cand[0].second;
    for (int t = 0; t < k_eff; ++t) {
      std::size_t pos = static_cast<std::size_t>(
          std::lower_bound(pool.donors.begin(), pool.donors.end(), cand[t].second) -
          pool.donors.begin());
      acc += pool.weights[pos];
      if (u <= acc) {
        chosen = cand[t].second;
        break;
      }
    }
    pop.biomass[i] = donors.records[chosen].biomass;
  }

  pop.true_means = Eigen::VectorXd::Zero(J);
  std::vector<std::vector<double>> per_county(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < n_px; ++i) {
    int j = pixels.units[i].county_id;
    if (j < 0 || j >= J) throw DataError("generate_population: county index out of range");
    per_county[static_cast<std::size_t>(j)].push_back(pop.biomass[i]);
  }
  for (int j = 0; j < J; ++j)
    if (!per_county[static_cast<std::size_t>(j)].empty())
      pop.true_means[j] = stable_mean(per_county[static_cast<std::size_t>(j)]);
  return pop;
}

PlotData draw_sample(const SimPopulation& pop, const std::vector<int>& sizes,
                     std::uint64_t seed) {
  if (static_cast<int>(sizes.size()) != pop.J)
    throw ConfigError("draw_sample: sizes length must equal county count");
  std::vector<std::vector<int>> by_county(static_cast<std::size_t>(pop.J));
  for (std::size_t i = 0; i < pop.pixels.units.size(); ++i)
    by_county[static_cast<std::size_t>(pop.pixels.units[i].county_id)].push_back(
        static_cast<int>(i));

  PlotData out;
  out.schema = pop.pixels.schema;
  Rng rng(seed);
  for (int j = 0; j < pop.J; ++j) {
    auto& idx = by_county[static_cast<std::size_t>(j)];
    const int nj = sizes[static_cast<std::size_t>(j)];
    if (nj < 0 || nj > static_cast<int>(idx.size()))
      throw DataError("draw_sample: n_j=" + std::to_string(nj) + " exceeds county " +
                      std::to_string(j) + " population " + std::to_string(idx.size()));
    std::vector<int> pool = idx;
    for (int t = 0; t < nj; ++t) {
      std::int64_t r = rng.uniform_int(static_cast<std::int64_t>(pool.size() - t));
      std::swap(pool[static_cast<std::size_t>(t)],
                pool[static_cast<std::size_t>(t) + static_cast<std::size_t>(r)]);
      const GridUnit& u = pop.pixels.units[static_cast<std::size_t>(pool[t])];
      PlotRecord rec;
      rec.id = "px" + std::to_string(pool[t]);
      rec.x = u.x;
      rec.y = u.y;
      rec.county_id = u.county_id;
      rec.biomass = pop.biomass[static_cast<std::size_t>(pool[t])];
      rec.predictors_x = u.predictors_x;
      rec.predictors_v = u.predictors_v;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

MetricsRecord compute_metrics(const std::vector<double>& estimates,
                              const std::vector<double>& rmse_hats,
                              const std::vector<std::pair<double, double>>& intervals,
                              double truth) {
  const std::size_t d = estimates.size();
  if (d == 0) throw DataError("compute_metrics: no replicates");
  if (rmse_hats.size() != d || intervals.size() != d)
    throw DataError("compute_metrics: replicate length mismatch");
  MetricsRecord rec;
  rec.replicates = static_cast<int>(d);
  std::vector<double> sq(d), est(d), rh(d);
  double covered = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double e = estimates[i] - truth;
    sq[i] = e * e;
    est[i] = estimates[i];
    rh[i] = rmse_hats[i];
    if (intervals[i].first <= truth && truth <= intervals[i].second) covered += 1.0;
  }
  rec.rmse = std::sqrt(stable_mean(sq));
  rec.bias = stable_mean(est) - truth;
  rec.rmse_hat_bias = stable_mean(rh) - rec.rmse;
  rec.coverage = covered / static_cast<double>(d);
  return rec;
}

std::vector<DesignMetrics> run_design(const SimPopulation& pop, const std::vector<int>& sizes,
                                      const std::vector<NamedEstimator>& estimators, int d,
                                      std::uint64_t seed) {
  if (d < 2) throw ConfigError("run_design: d must be at least 2");
  if (estimators.empty()) throw ConfigError("run_design: no estimators");
  const int J = pop.J;
  struct Cell {
    std::vector<double> estimates, rmse_hats;
    std::vector<std::pair<double, double>> intervals;
  };
  std::vector<std::vector<Cell>> cells(estimators.size(),
                                       std::vector<Cell>(static_cast<std::size_t>(J)));
  std::vector<int> failures(estimators.size(), 0);

  for (int i = 0; i < d; ++i) {
    PlotData sample = draw_sample(pop, sizes, derive_seed(seed, "rep", i));
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      std::uint64_t est_seed =
          derive_seed(derive_seed(seed, estimators[e].name, 17), "rep", i);
      std::vector<CountyEstimate> result;
      try {
        result = estimators[e].fn(sample, pop.pixels, J, est_seed);
      } catch (const std::exception& ex) {
        failures[e] += 1;
        warn("run_design: estimator " + estimators[e].name + " failed on replicate " +
             std::to_string(i) + ": " + ex.what());
        continue;
      }
      for (const auto& ce : result) {
        if (ce.county_id < 0 || ce.county_id >= J) continue;
        Cell& cell = cells[e][static_cast<std::size_t>(ce.county_id)];
        cell.estimates.push_back(ce.estimate);
        cell.rmse_hats.push_back(ce.rmse_hat);
        cell.intervals.emplace_back(ce.lo, ce.hi);
      }
    }
  }

  std::vector<DesignMetrics> out;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    DesignMetrics dm;
    dm.estimator = estimators[e].name;
    dm.failures = failures[e];
    dm.d = d;
    for (int j = 0; j < J; ++j) {
      const Cell& cell = cells[e][static_cast<std::size_t>(j)];
      MetricsRecord rec;
      if (cell.estimates.empty()) {
        rec.rmse = rec.bias = rec.rmse_hat_bias = rec.coverage =
            std::numeric_limits<double>::quiet_NaN();
      } else {
        rec = compute_metrics(cell.estimates, cell.rmse_hats, cell.intervals,
                              pop.true_means[j]);
      }
      rec.county_id = j;
      dm.counties.push_back(rec);
    }
    out.push_back(std::move(dm));
  }
  return out;
}

std::vector<std::vector<int>> make_folds(int n, int K, std::uint64_t seed) {
  if (K < 2) throw ConfigError("cv: K must be at least 2");
  if (K > n) throw ConfigError("cv: K exceeds the number of units");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int t = 0; t < n - 1; ++t) {
    std::int64_t r = rng.uniform_int(static_cast<std::int64_t>(n - t));
    std::swap(idx[static_cast<std::size_t>(t)],
              idx[static_cast<std::size_t>(t) + static_cast<std::size_t>(r)]);
  }
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(K));
  for (int t = 0; t < n; ++t) folds[static_cast<std::size_t>(t % K)].push_back(idx[t]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvMetrics kfold_cv(const PlotData& data, int J, int K, const UnitPredictorFn& predictor,
                   std::uint64_t seed) {
  const int n = static_cast<int>(data.records.size());
  auto folds = make_folds(n, K, derive_seed(seed, "folds", 0));
  std::vector<double> pred(static_cast<std::size_t>(n), 0.0);
  std::vector<double> lo(static_cast<std::size_t>(n), 0.0), hi(static_cast<std::size_t>(n), 0.0);
  bool all_intervals = true;

  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> held(static_cast<std::size_t>(n), 0);
    for (int i : folds[f]) held[static_cast<std::size_t>(i)] = 1;
    PlotData train;
    train.schema = data.schema;
    for (int i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) train.records.push_back(data.records[i]);
    GridData holdout;
    holdout.schema = data.schema;
    for (int i : folds[f]) {
      const PlotRecord& r = data.records[static_cast<std::size_t>(i)];
      GridUnit u;
      u.x = r.x;
      u.y = r.y;
      u.county_id = r.county_id;
      u.predictors_x = r.predictors_x;
      u.predictors_v = r.predictors_v;
      holdout.units.push_back(std::move(u));
    }
    std::vector<UnitCvPrediction> preds;
    try {
      preds = predictor(train, holdout, J, derive_seed(seed, "fold", f));
    } catch (const std::exception& ex) {
      throw NumericError("cv: estimator failed on fold " + std::to_string(f) + ": " +
                         ex.what());
    }
    if (preds.size() != folds[f].size())
      throw NumericError("cv: predictor returned wrong number of units on fold " +
                         std::to_string(f));
    for (std::size_t t = 0; t < folds[f].size(); ++t) {
      int i = folds[f][t];
      pred[static_cast<std::size_t>(i)] = preds[t].point;
      if (preds[t].has_interval) {
        lo[static_cast<std::size_t>(i)] = preds[t].lo;
        hi[static_cast<std::size_t>(i)] = preds[t].hi;
      } else {
        all_intervals = false;
      }
    }
  }

  std::vector<double> diff(static_cast<std::size_t>(n)), sq(static_cast<std::size_t>(n));
  double covered = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = pred[static_cast<std::size_t>(i)] - data.records[static_cast<std::size_t>(i)].biomass;
    diff[static_cast<std::size_t>(i)] = e;
    sq[static_cast<std::size_t>(i)] = e * e;
    double y = data.records[static_cast<std::size_t>(i)].biomass;
    if (lo[static_cast<std::size_t>(i)] <= y && y <= hi[static_cast<std::size_t>(i)])
      covered += 1.0;
  }
  CvMetrics m;
  m.n = n;
  m.rmspe = std::sqrt(stable_mean(sq));
  m.bias = stable_mean(diff);
  if (all_intervals) m.coverage = covered / static_cast<double>(n);
  return m;
}

}  // namespace sae
