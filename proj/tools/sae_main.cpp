#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sae/archive.hpp"
#include "sae/config.hpp"
#include "sae/csv.hpp"
#include "sae/data.hpp"
#include "sae/errors.hpp"
#include "sae/estimators.hpp"
#include "sae/freq.hpp"
#include "sae/predict.hpp"
#include "sae/rng.hpp"
#include "sae/simeval.hpp"
#include "sae/synthetic.hpp"
#include "sae/transforms.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitConvergence = 5;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

sae::RunConfig effective_config(const CliOverrides& cli, const std::string& command) {
  sae::RunConfig cfg = sae::load_config(cli.config_path);
  if (cli.seed) {
    cfg.seed = *cli.seed;
    cfg.seed_set = true;
  }
  if (cli.workers) cfg.workers = *cli.workers;
  if (cli.out) cfg.out = *cli.out;
  sae::validate_config(cfg, command);
#ifdef _OPENMP
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
#endif
  std::filesystem::create_directories(cfg.out);
  return cfg;
}

sae::ColumnSchema schema_of(const sae::RunConfig& cfg) {
  sae::ColumnSchema s;
  s.predictors_x = cfg.predictors_x;
  s.predictors_v = cfg.predictors_v;
  return s;
}

sae::EstimatorConfig estimator_config(const sae::RunConfig& cfg, const std::string& model,
                                      std::uint64_t seed) {
  sae::EstimatorConfig ec;
  ec.spec = sae::ModelSpec::from_name(model);
  ec.spec.nngp_neighbors = cfg.nngp_m;
  ec.priors = cfg.priors;
  ec.mcmc = cfg.mcmc;
  ec.bootstrap_B = cfg.bootstrap_b;
  ec.predict_m = cfg.predict_m;
  ec.root = cfg.transform_root;
  ec.seed = seed;
  return ec;
}

int cmd_fit(const sae::RunConfig& cfg) {
  sae::CountyTable counties;
  sae::PlotData plots = sae::load_plots(cfg.plots, schema_of(cfg), counties);
  sae::PredictorStats stats = sae::standardize_predictors(plots.records, plots.schema, nullptr,
                                                          cfg.constant_predictors);
  const int J = counties.size();
  const std::string hash = sae::config_hash(cfg);
  bool all_converged = true;

  for (const std::string& model : cfg.models) {
    sae::EstimatorConfig ec = estimator_config(cfg, model, sae::derive_seed(cfg.seed, model, 0));
    sae::FittedEstimator fit = sae::fit_estimator(ec, plots, J);

    sae::ArchiveManifest man;
    man.model = model;
    man.paradigm = ec.spec.paradigm == sae::Paradigm::bayesian ? "bayesian" : "frequentist";
    man.config_hash = hash;
    man.root = cfg.transform_root;
    man.seed = ec.seed;
    for (int j = 0; j < J; ++j) man.counties.push_back(counties.name(j));
    man.predictors_x = cfg.predictors_x;
    man.predictors_v = cfg.predictors_v;
    man.standardization = stats;
    man.priors = cfg.priors;
    man.bootstrap_b = cfg.bootstrap_b;
    man.predict_m = cfg.predict_m;
    if (fit.bayes) {
      man.chains = ec.mcmc.chains;
      man.iterations = ec.mcmc.iterations;
      man.burn_in = ec.mcmc.burn_in;
      man.thin = ec.mcmc.thin;
      man.M = fit.bayes->draws.M;
      man.converged = fit.bayes->diagnostics.converged;
      man.max_psrf = fit.bayes->diagnostics.max_psrf;
      man.n_w = static_cast<int>(fit.bayes->draws.w.cols());
      if (!man.converged) {
        all_converged = false;
        sae::warn("fit: " + model + " did not reach the PSRF threshold (max " +
                  sae::csv::format_double(man.max_psrf) + ")");
      }
    }
    sae::write_archive(cfg.out + "/" + model, man, fit);
    std::cout << model << ": archived to " << cfg.out << "/" << model
              << (man.paradigm == "bayesian"
                      ? " (M=" + std::to_string(man.M) + ", max PSRF " +
                            sae::csv::format_double(man.max_psrf) + ")"
                      : "")
              << "\n";
  }
  return all_converged ? kExitOk : kExitConvergence;
}

int cmd_predict(const sae::RunConfig& cfg) {
  sae::LoadedArchive ar = sae::load_archive(cfg.predict.archive);
  sae::ColumnSchema schema;
  schema.predictors_x = ar.manifest.predictors_x;
  schema.predictors_v = ar.manifest.predictors_v;
  sae::GridData grid = sae::load_grid(cfg.predict.grid, schema, ar.counties, false);
  sae::standardize_grid(grid.units, schema, ar.manifest.standardization);
  const int J = ar.counties.size();
  sae::Transform tr = sae::make_transform(ar.manifest.root);

  sae::csv::Writer counties_csv(cfg.out + "/counties.csv");
  counties_csv.write_row({"county", "estimate", "sd", "q025", "q975", "M"});

  if (ar.fit.bayes) {
    sae::PredictOptions opts;
    opts.nngp_m = ar.manifest.predict_m;
    opts.tau2_2 = ar.manifest.priors.tau2_2;
    opts.seed = sae::derive_seed(ar.manifest.seed, "predict", 0);
    auto preds = sae::posterior_predict_counties(ar.fit.bayes->draws, grid, J, tr, opts,
                                                 cfg.predict.unit_csv);
    for (const auto& cp : preds.counties)
      counties_csv.write_row({ar.counties.name(cp.county_id), sae::csv::format_double(cp.mean),
                              sae::csv::format_double(cp.sd), sae::csv::format_double(cp.q025),
                              sae::csv::format_double(cp.q975),
                              std::to_string(ar.manifest.M)});
    if (cfg.predict.unit_csv) {
      sae::csv::Writer units_csv(cfg.out + "/units.csv");
      units_csv.write_row({"x_km", "y_km", "county", "p_mean", "biomass_mean"});
      for (std::size_t i = 0; i < grid.units.size(); ++i) {
        const auto& u = grid.units[i];
        units_csv.write_row({sae::csv::format_double(u.x), sae::csv::format_double(u.y),
                             ar.counties.name(u.county_id),
                             sae::csv::format_double(preds.units[i].p_mean),
                             sae::csv::format_double(preds.units[i].biomass_mean)});
      }
    }
    return kExitOk;
  }

  sae::EstimatorResult res = sae::estimate_counties(ar.fit, grid);
  for (const auto& ce : res.counties)
    counties_csv.write_row({ar.counties.name(ce.county_id), sae::csv::format_double(ce.estimate),
                            sae::csv::format_double(ce.rmse_hat), sae::csv::format_double(ce.lo),
                            sae::csv::format_double(ce.hi),
                            std::to_string(ar.manifest.bootstrap_b)});
  if (cfg.predict.unit_csv) {
    sae::GridMatrices gm = sae::grid_matrices(grid, J);
    auto units = sae::predict_units(*ar.fit.lmm, *ar.fit.glmm, gm, tr);
    sae::csv::Writer units_csv(cfg.out + "/units.csv");
    units_csv.write_row({"x_km", "y_km", "county", "p_mean", "biomass_mean"});
    for (std::size_t i = 0; i < grid.units.size(); ++i) {
      const auto& u = grid.units[i];
      units_csv.write_row({sae::csv::format_double(u.x), sae::csv::format_double(u.y),
                           ar.counties.name(u.county_id),
                           sae::csv::format_double(units[i].p_hat),
                           sae::csv::format_double(units[i].product)});
    }
  }
  return kExitOk;
}

std::vector<double> raw_column(const sae::ColumnSchema& schema, const std::string& name,
                               const std::vector<sae::PlotRecord>& records,
                               const std::vector<sae::GridUnit>& units) {
  int ix = -1, iv = -1;
  for (std::size_t k = 0; k < schema.predictors_x.size(); ++k)
    if (schema.predictors_x[k] == name) ix = static_cast<int>(k);
  for (std::size_t k = 0; k < schema.predictors_v.size(); ++k)
    if (schema.predictors_v[k] == name) iv = static_cast<int>(k);
  if (ix < 0 && iv < 0)
    throw sae::ConfigError("config: stratify_by column '" + name +
                           "' is not a declared predictor");
  std::vector<double> out;
  for (const auto& r : records)
    out.push_back(ix >= 0 ? r.predictors_x[static_cast<std::size_t>(ix)]
                          : r.predictors_v[static_cast<std::size_t>(iv)]);
  for (const auto& u : units)
    out.push_back(ix >= 0 ? u.predictors_x[static_cast<std::size_t>(ix)]
                          : u.predictors_v[static_cast<std::size_t>(iv)]);
  return out;
}

int cmd_simulate(const sae::RunConfig& cfg) {
  sae::GridData pixels;
  sae::PlotData donors;
  sae::CountyTable counties;
  std::vector<std::string> pixel_strata, donor_strata;
  int J = 0;

  if (cfg.sim.synthetic) {
    sae::SyntheticConfig sc;
    sc.grid_side = cfg.sim.grid_side;
    sc.n_donors = cfg.sim.n_donors;
    sc.seed = cfg.sim.scene_seed;
    sae::SyntheticScene scene = sae::make_synthetic_scene(sc);
    pixels = std::move(scene.pixels);
    donors = std::move(scene.donors);
    counties = std::move(scene.counties);
    pixel_strata = std::move(scene.pixel_strata);
    donor_strata = std::move(scene.donor_strata);
    J = scene.J;
  } else {
    donors = sae::load_plots(cfg.sim.donors, schema_of(cfg), counties);
    pixels = sae::load_grid(cfg.sim.pixels, schema_of(cfg), counties);
    J = counties.size();
    std::vector<double> donor_vals =
        raw_column(donors.schema, cfg.sim.stratify_by, donors.records, {});
    std::vector<double> pixel_vals =
        raw_column(pixels.schema, cfg.sim.stratify_by, {}, pixels.units);
    donor_strata = sae::tnt_strata(donor_vals, cfg.sim.stratify_threshold);
    pixel_strata = sae::tnt_strata(pixel_vals, cfg.sim.stratify_threshold);
  }

  sae::PredictorStats stats = sae::standardize_predictors(donors.records, donors.schema, nullptr,
                                                          cfg.constant_predictors);
  sae::standardize_grid(pixels.units, pixels.schema, stats);

  sae::SimPopulation pop = sae::generate_population(pixels, donors, pixel_strata, donor_strata,
                                                    cfg.sim.k, J,
                                                    sae::derive_seed(cfg.seed, "pop", 0));

  std::vector<int> sizes = cfg.sim.sizes;
  if (sizes.empty()) sizes.assign(static_cast<std::size_t>(J), cfg.sim.size_per_county);
  if (static_cast<int>(sizes.size()) != J)
    throw sae::ConfigError("config: simulation sizes must list every county (J=" +
                           std::to_string(J) + ")");

  std::vector<sae::NamedEstimator> estimators;
  for (const std::string& model : cfg.models) {
    estimators.push_back(sae::NamedEstimator{
        model, [&cfg, model](const sae::PlotData& sample, const sae::GridData& grid, int nj,
                             std::uint64_t seed) {
          sae::EstimatorConfig ec = estimator_config(cfg, model, seed);
          sae::FittedEstimator fit = sae::fit_estimator(ec, sample, nj);
          sae::EstimatorResult res = sae::estimate_counties(fit, grid);
          if (!res.converged)
            sae::warn("simulate: " + model + " did not reach the PSRF threshold");
          return res.counties;
        }});
  }
  if (cfg.sim.oracle_truth) {
    const Eigen::VectorXd truth = pop.true_means;
    estimators.push_back(sae::NamedEstimator{
        "ORACLE_TRUTH",
        [truth](const sae::PlotData&, const sae::GridData&, int nj, std::uint64_t) {
          std::vector<sae::CountyEstimate> out;
          for (int j = 0; j < nj; ++j)
            out.push_back(sae::CountyEstimate{j, truth[j], 0.0, truth[j], truth[j]});
          return out;
        }});
  }

  auto metrics = sae::run_design(pop, sizes, estimators, cfg.sim.d,
                                 sae::derive_seed(cfg.seed, "design", 0));

  sae::csv::Writer out(cfg.out + "/simulation_metrics.csv");
  out.write_row({"estimator", "county", "rmse", "bias", "rmse_hat_bias", "coverage",
                 "replicates", "failures", "d"});
  bool too_many_failures = false;
  for (const auto& dm : metrics) {
    if (dm.failures * 10 > dm.d) too_many_failures = true;
    for (const auto& rec : dm.counties)
      out.write_row({dm.estimator, counties.name(rec.county_id),
                     sae::csv::format_double(rec.rmse), sae::csv::format_double(rec.bias),
                     sae::csv::format_double(rec.rmse_hat_bias),
                     sae::csv::format_double(rec.coverage), std::to_string(rec.replicates),
                     std::to_string(dm.failures), std::to_string(dm.d)});
  }
  out.close();
  if (too_many_failures) {
    std::cerr << "simulate: an estimator failed on more than 10% of replicates\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_cv(const sae::RunConfig& cfg) {
  sae::CountyTable counties;
  sae::PlotData plots = sae::load_plots(cfg.plots, schema_of(cfg), counties);
  sae::standardize_predictors(plots.records, plots.schema, nullptr, cfg.constant_predictors);
  const int J = counties.size();

  sae::csv::Writer out(cfg.out + "/cv_metrics.csv");
  out.write_row({"estimator", "rmspe", "bias", "coverage", "n", "k_folds"});
  for (const std::string& model : cfg.models) {
    sae::UnitPredictorFn fn = [&cfg, model](const sae::PlotData& train,
                                            const sae::GridData& holdout, int nj,
                                            std::uint64_t seed) {
      sae::EstimatorConfig ec = estimator_config(cfg, model, seed);
      sae::FittedEstimator fit = sae::fit_estimator(ec, train, nj);
      return sae::predict_holdout(fit, holdout);
    };
    sae::CvMetrics m =
        sae::kfold_cv(plots, J, cfg.cv.k_folds, fn, sae::derive_seed(cfg.seed, model, 0));
    out.write_row({model, sae::csv::format_double(m.rmspe), sae::csv::format_double(m.bias),
                   m.coverage ? sae::csv::format_double(*m.coverage) : std::string(),
                   std::to_string(m.n), std::to_string(cfg.cv.k_folds)});
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sae: zero-inflated small-area biomass estimation"};
  app.require_subcommand(1);

  CliOverrides cli;
  std::string command;
  for (const char* name : {"fit", "predict", "simulate", "cv"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", [&cli](const std::vector<std::string>& v) {
      cli.seed = std::stoull(v.at(0));
      return true;
    }, "master seed override");
    sub->add_option("--workers", [&cli](const std::vector<std::string>& v) {
      cli.workers = std::stoi(v.at(0));
      return true;
    }, "worker thread count (0 = all cores)");
    sub->add_option("--out", [&cli](const std::vector<std::string>& v) {
      cli.out = v.at(0);
      return true;
    }, "output directory override");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    sae::RunConfig cfg = effective_config(cli, command);
    if (command == "fit") return cmd_fit(cfg);
    if (command == "predict") return cmd_predict(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    return cmd_cv(cfg);
  } catch (const sae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sae::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const sae::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
