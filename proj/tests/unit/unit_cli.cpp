#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "sae/archive.hpp"
#include "sae/config.hpp"
#include "sae/data.hpp"
#include "sae/errors.hpp"
#include "sae/estimators.hpp"
#include "sae/freq.hpp"
#include "sae/predict.hpp"
#include "sae/rng.hpp"
#include "sae/transforms.hpp"

#ifndef SAE_CLI_PATH
#define SAE_CLI_PATH "./sae"
#endif

namespace {

sae::PlotData demo_plots(int n, int J, sae::CountyTable& counties, std::uint64_t seed) {
  for (int j = 0; j < J; ++j) counties.intern("c" + std::to_string(j));
  sae::Rng rng(seed);
  sae::PlotData plots;
  plots.schema.predictors_x = {"tcc"};
  plots.schema.predictors_v = {"tcc"};
  for (int i = 0; i < n; ++i) {
    const int j = i % J;
    const double t = rng.uniform(-1.5, 1.5);
    const double p = 1.0 / (1.0 + std::exp(-(0.5 + 0.9 * t)));
    double biomass = 0.0;
    if (rng.uniform() < p) {
      const double yt = 2.5 + 0.6 * t + 0.2 * j + 0.5 * rng.normal();
      biomass = yt * yt;
    }
    plots.records.push_back(fixtures::plot("p" + std::to_string(i), rng.uniform(0.0, 30.0),
                                           rng.uniform(0.0, 30.0), j, biomass, {t}, {t}));
  }
  return plots;
}

sae::GridData demo_grid(int per_county, int J, std::uint64_t seed) {
  sae::Rng rng(seed);
  sae::GridData grid;
  grid.schema.predictors_x = {"tcc"};
  grid.schema.predictors_v = {"tcc"};
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < per_county; ++i) {
      const double t = rng.uniform(-1.2, 1.2);
      grid.units.push_back(
          fixtures::unit(rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0), j, {t}, {t}));
    }
  return grid;
}

sae::EstimatorConfig freq_config(std::uint64_t seed) {
  sae::EstimatorConfig cfg;
  cfg.spec = sae::ModelSpec::from_name("F_ZI_CVI");
  cfg.bootstrap_B = 40;
  cfg.root = 2;
  cfg.seed = seed;
  return cfg;
}

sae::EstimatorConfig bayes_config(const std::string& name, std::uint64_t seed) {
  sae::EstimatorConfig cfg;
  cfg.spec = sae::ModelSpec::from_name(name);
  cfg.mcmc.chains = 2;
  cfg.mcmc.iterations = 400;
  cfg.mcmc.burn_in = 100;
  cfg.mcmc.thin = 3;
  cfg.predict_m = 5;
  cfg.root = 2;
  cfg.seed = seed;
  return cfg;
}

int g_log_counter = 0;

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun run_cli(const fixtures::TempDir& td, const std::string& args) {
  const std::string log = td.path("cli_log_" + std::to_string(g_log_counter++) + ".txt");
  const std::string cmd = std::string(SAE_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  CliRun out;
  out.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  out.output = fixtures::read_text(log);
  return out;
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

TEST_CASE("frequentist estimator pipeline builds symmetric normal intervals") {
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(90, 3, counties, 11);
  const sae::GridData grid = demo_grid(5, 3, 21);

  const sae::FittedEstimator fit = sae::fit_estimator(freq_config(5), plots, 3);
  CHECK(fit.lmm.has_value());
  CHECK(fit.glmm.has_value());
  CHECK_FALSE(fit.bayes.has_value());
  CHECK(fit.J == 3);
  CHECK(fit.sample.X.rows() == 90);
  CHECK(fit.sample.V.rows() == 90);

  const sae::EstimatorResult res = sae::estimate_counties(fit, grid);
  REQUIRE(res.counties.size() == 3);
  CHECK(res.converged);
  CHECK(res.bootstrap_failures * 10 <= 40);
  for (const auto& ce : res.counties) {
    CHECK(ce.estimate >= 0.0);
    CHECK(ce.rmse_hat >= 0.0);
    CHECK(ce.lo == doctest::Approx(ce.estimate - 1.96 * ce.rmse_hat).epsilon(1e-12));
    CHECK(ce.hi == doctest::Approx(ce.estimate + 1.96 * ce.rmse_hat).epsilon(1e-12));
  }

  const sae::EstimatorResult rerun = sae::estimate_counties(fit, grid);
  for (std::size_t i = 0; i < res.counties.size(); ++i) {
    CHECK(rerun.counties[i].estimate == res.counties[i].estimate);
    CHECK(rerun.counties[i].rmse_hat == res.counties[i].rmse_hat);
  }
}

TEST_CASE("bayesian estimator pipeline produces ordered credible intervals") {
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(90, 3, counties, 11);
  const sae::GridData grid = demo_grid(5, 3, 21);

  const sae::FittedEstimator fit = sae::fit_estimator(bayes_config("B_ZI_CVI", 99), plots, 3);
  REQUIRE(fit.bayes.has_value());
  CHECK_FALSE(fit.lmm.has_value());
  CHECK(fit.bayes->draws.M == 200);

  const sae::EstimatorResult res = sae::estimate_counties(fit, grid);
  REQUIRE(res.counties.size() == 3);
  for (int j = 0; j < 3; ++j) {
    const auto& ce = res.counties[j];
    CHECK(ce.county_id == j);
    CHECK(ce.estimate >= 0.0);
    CHECK(ce.rmse_hat >= 0.0);
    CHECK(ce.lo <= ce.estimate);
    CHECK(ce.estimate <= ce.hi);
  }
  CHECK(!res.diagnostics.psrf.empty());

  const sae::EstimatorResult rerun = sae::estimate_counties(fit, grid);
  for (int j = 0; j < 3; ++j) CHECK(rerun.counties[j].estimate == res.counties[j].estimate);
}

TEST_CASE("holdout predictions expose intervals only for the Bayesian paradigm") {
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(90, 3, counties, 11);
  const sae::GridData holdout = demo_grid(2, 3, 33);

  const sae::FittedEstimator freq = sae::fit_estimator(freq_config(5), plots, 3);
  const auto fp = sae::predict_holdout(freq, holdout);
  REQUIRE(fp.size() == holdout.units.size());
  const sae::GridMatrices gm = sae::grid_matrices(holdout, 3);
  const auto units = sae::predict_units(*freq.lmm, *freq.glmm, gm, sae::make_transform(2));
  for (std::size_t i = 0; i < fp.size(); ++i) {
    CHECK_FALSE(fp[i].has_interval);
    CHECK(fp[i].point == units[i].product);
  }

  const sae::FittedEstimator bayes = sae::fit_estimator(bayes_config("B_ZI_CVI", 99), plots, 3);
  const auto bp = sae::predict_holdout(bayes, holdout);
  REQUIRE(bp.size() == holdout.units.size());
  for (const auto& u : bp) {
    CHECK(u.has_interval);
    CHECK(u.point >= 0.0);
    CHECK(u.lo <= u.point);
    CHECK(u.point <= u.hi);
  }
  const auto bp2 = sae::predict_holdout(bayes, holdout);
  for (std::size_t i = 0; i < bp.size(); ++i) CHECK(bp2[i].point == bp[i].point);
}

TEST_CASE("frequentist archives round-trip every stored matrix exactly") {
  fixtures::TempDir td;
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(90, 3, counties, 11);
  const sae::GridData grid = demo_grid(5, 3, 21);
  const sae::FittedEstimator fit = sae::fit_estimator(freq_config(5), plots, 3);

  sae::ArchiveManifest man;
  man.model = "F_ZI_CVI";
  man.paradigm = "frequentist";
  man.config_hash = "deadbeef";
  man.root = 2;
  man.seed = 5;
  man.counties = {"c0", "c1", "c2"};
  man.predictors_x = {"tcc"};
  man.predictors_v = {"tcc"};
  man.standardization["tcc"] = sae::ColumnStats{0.125, 1.75, false};
  man.bootstrap_b = 40;
  man.predict_m = 15;
  const std::string dir = td.path("freq_archive");
  sae::write_archive(dir, man, fit);

  const sae::LoadedArchive loaded = sae::load_archive(dir);
  CHECK(loaded.manifest.model == "F_ZI_CVI");
  CHECK(loaded.manifest.paradigm == "frequentist");
  CHECK(loaded.manifest.config_hash == "deadbeef");
  CHECK(loaded.manifest.root == 2);
  CHECK(loaded.manifest.seed == 5);
  CHECK(loaded.manifest.counties == man.counties);
  CHECK(loaded.manifest.predictors_x == man.predictors_x);
  CHECK(loaded.manifest.predictors_v == man.predictors_v);
  REQUIRE(loaded.manifest.standardization.count("tcc") == 1);
  CHECK(loaded.manifest.standardization.at("tcc").mean == 0.125);
  CHECK(loaded.manifest.standardization.at("tcc").sd == 1.75);
  CHECK_FALSE(loaded.manifest.standardization.at("tcc").constant);
  CHECK(loaded.manifest.bootstrap_b == 40);
  CHECK(loaded.counties.size() == 3);
  CHECK(loaded.counties.name(1) == "c1");

  REQUIRE(loaded.fit.lmm.has_value());
  REQUIRE(loaded.fit.glmm.has_value());
  CHECK_FALSE(loaded.fit.bayes.has_value());
  CHECK(loaded.fit.cfg.spec.name() == "F_ZI_CVI");
  CHECK(loaded.fit.lmm->beta0_hat == fit.lmm->beta0_hat);
  CHECK(loaded.fit.lmm->beta_hat == fit.lmm->beta_hat);
  CHECK(loaded.fit.lmm->sigma2_b0_hat == fit.lmm->sigma2_b0_hat);
  CHECK(loaded.fit.lmm->tau2_hat == fit.lmm->tau2_hat);
  CHECK(loaded.fit.lmm->blups == fit.lmm->blups);
  CHECK(loaded.fit.glmm->alpha0_hat == fit.glmm->alpha0_hat);
  CHECK(loaded.fit.glmm->alpha_hat == fit.glmm->alpha_hat);
  CHECK(loaded.fit.glmm->sigma2_a0_hat == fit.glmm->sigma2_a0_hat);
  CHECK(loaded.fit.glmm->county_modes == fit.glmm->county_modes);
  CHECK(loaded.fit.sample.X == fit.sample.X);
  CHECK(loaded.fit.sample.V == fit.sample.V);
  CHECK(loaded.fit.sample.county == fit.sample.county);

  const sae::EstimatorResult a = sae::estimate_counties(fit, grid);
  const sae::EstimatorResult b = sae::estimate_counties(loaded.fit, grid);
  REQUIRE(a.counties.size() == b.counties.size());
  for (std::size_t i = 0; i < a.counties.size(); ++i) {
    CHECK(a.counties[i].estimate == b.counties[i].estimate);
    CHECK(a.counties[i].rmse_hat == b.counties[i].rmse_hat);
  }
}

TEST_CASE("bayesian spatial archives restore draws bit for bit") {
  fixtures::TempDir td;
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(60, 3, counties, 13);
  const sae::GridData grid = demo_grid(4, 3, 29);

  sae::EstimatorConfig cfg = bayes_config("B_ZI_CVI_SVI_CRV", 404);
  cfg.mcmc.iterations = 200;
  cfg.mcmc.burn_in = 50;
  cfg.mcmc.thin = 2;
  const sae::FittedEstimator fit = sae::fit_estimator(cfg, plots, 3);
  REQUIRE(fit.bayes.has_value());
  CHECK(fit.bayes->draws.M == 150);
  CHECK(fit.bayes->draws.w.rows() == 150);

  sae::ArchiveManifest man;
  man.model = "B_ZI_CVI_SVI_CRV";
  man.paradigm = "bayesian";
  man.config_hash = "cafef00d";
  man.root = 2;
  man.seed = 404;
  man.counties = {"c0", "c1", "c2"};
  man.predictors_x = {"tcc"};
  man.predictors_v = {"tcc"};
  man.standardization["tcc"] = sae::ColumnStats{0.0, 1.0, false};
  man.chains = cfg.mcmc.chains;
  man.iterations = cfg.mcmc.iterations;
  man.burn_in = cfg.mcmc.burn_in;
  man.thin = cfg.mcmc.thin;
  man.M = fit.bayes->draws.M;
  man.predict_m = cfg.predict_m;
  man.converged = fit.bayes->diagnostics.converged;
  man.max_psrf = fit.bayes->diagnostics.max_psrf;
  man.n_w = static_cast<int>(fit.bayes->draws.w.cols());
  const std::string dir = td.path("bayes_archive");
  sae::write_archive(dir, man, fit);

  const sae::LoadedArchive loaded = sae::load_archive(dir);
  REQUIRE(loaded.fit.bayes.has_value());
  CHECK(loaded.manifest.M == 150);
  CHECK(loaded.manifest.n_w == man.n_w);
  CHECK(loaded.manifest.max_psrf == man.max_psrf);
  CHECK(loaded.fit.cfg.spec.name() == "B_ZI_CVI_SVI_CRV");

  const Eigen::MatrixXd pm_a = sae::param_matrix(fit.bayes->draws);
  const Eigen::MatrixXd pm_b = sae::param_matrix(loaded.fit.bayes->draws);
  REQUIRE(pm_a.rows() == pm_b.rows());
  REQUIRE(pm_a.cols() == pm_b.cols());
  CHECK(pm_a == pm_b);
  CHECK(loaded.fit.bayes->draws.w == fit.bayes->draws.w);
  CHECK(loaded.fit.bayes->draws.w_x == fit.bayes->draws.w_x);
  CHECK(loaded.fit.bayes->draws.w_y == fit.bayes->draws.w_y);

  const sae::EstimatorResult a = sae::estimate_counties(fit, grid);
  const sae::EstimatorResult b = sae::estimate_counties(loaded.fit, grid);
  REQUIRE(a.counties.size() == b.counties.size());
  for (std::size_t i = 0; i < a.counties.size(); ++i) {
    CHECK(a.counties[i].estimate == b.counties[i].estimate);
    CHECK(a.counties[i].lo == b.counties[i].lo);
    CHECK(a.counties[i].hi == b.counties[i].hi);
  }

  const std::string summary_path = td.path("summary.csv");
  sae::write_posterior_summary(summary_path, fit.bayes->draws);
  const std::string text = fixtures::read_text(summary_path);
  const auto lines = nonempty_lines(text);
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "parameter,mean,q025,q975");
  std::ptrdiff_t phi_row = -1, range_row = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_row(lines[i]);
    REQUIRE(fields.size() == 4);
    if (fields[0] == "phi") phi_row = static_cast<std::ptrdiff_t>(i);
    if (fields[0] == "effective_range_km") range_row = static_cast<std::ptrdiff_t>(i);
  }
  REQUIRE(phi_row >= 0);
  REQUIRE(range_row >= 0);
  CHECK(range_row == phi_row + 1);
}

TEST_CASE("config loading rejects malformed files and hashes the effective run") {
  fixtures::TempDir td;
  const std::string good = td.path("good.json");
  fixtures::write_text(good,
                       "{\"seed\": 7, \"out\": \"a\", \"workers\": 2,"
                       " \"predictors_x\": [\"tcc\"], \"predictors_v\": [\"tcc\"],"
                       " \"models\": [\"F_ZI_CVI\"]}");
  sae::RunConfig cfg = sae::load_config(good);
  CHECK(cfg.seed == 7);
  CHECK(cfg.seed_set);
  CHECK(cfg.workers == 2);

  const std::string other = td.path("other.json");
  fixtures::write_text(other,
                       "{\"seed\": 7, \"out\": \"b\", \"workers\": 5,"
                       " \"predictors_x\": [\"tcc\"], \"predictors_v\": [\"tcc\"],"
                       " \"models\": [\"F_ZI_CVI\"]}");
  const sae::RunConfig cfg2 = sae::load_config(other);
  CHECK(sae::config_hash(cfg) == sae::config_hash(cfg2));
  cfg.seed = 8;
  CHECK(sae::config_hash(cfg) != sae::config_hash(cfg2));

  const std::string unknown = td.path("unknown.json");
  fixtures::write_text(unknown, "{\"seed\": 1, \"bogus\": true}");
  CHECK_THROWS_WITH_AS(sae::load_config(unknown), doctest::Contains("unknown key"),
                       sae::ConfigError);

  const std::string noseed = td.path("noseed.json");
  fixtures::write_text(noseed, "{\"models\": [\"F_ZI_CVI\"]}");
  const sae::RunConfig nc = sae::load_config(noseed);
  CHECK_THROWS_WITH_AS(sae::validate_config(nc, "fit"), doctest::Contains("seed"),
                       sae::ConfigError);

  const std::string badjson = td.path("bad.json");
  fixtures::write_text(badjson, "{\"seed\": ");
  CHECK_THROWS_AS(sae::load_config(badjson), sae::ConfigError);
}

TEST_CASE("cli rejects bad invocations with the config exit code") {
  fixtures::TempDir td;
  CHECK(run_cli(td, "").code == 2);
  CHECK(run_cli(td, "fit").code == 2);
  CHECK(run_cli(td, "fit --config " + td.path("missing.json")).code == 2);

  const std::string noseed = td.path("noseed.json");
  fixtures::write_text(noseed, "{\"models\": [\"F_ZI_CVI\"]}");
  const CliRun r = run_cli(td, "fit --config " + noseed);
  CHECK(r.code == 2);
  CHECK(r.output.find("seed") != std::string::npos);
}

TEST_CASE("cli fit, predict, and cv run end to end and rerun byte-identically") {
  fixtures::TempDir td;
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(24, 3, counties, 2024);
  const sae::GridData grid = demo_grid(4, 3, 77);
  const std::string plots_csv = td.path("plots.csv");
  const std::string grid_csv = td.path("grid.csv");
  sae::write_plots(plots_csv, plots, counties);
  sae::write_grid(grid_csv, grid, counties);

  const std::string fit_cfg = td.path("fit.json");
  fixtures::write_text(fit_cfg,
                       "{\"seed\": 31, \"root\": 2,"
                       " \"predictors_x\": [\"tcc\"], \"predictors_v\": [\"tcc\"],"
                       " \"models\": [\"F_ZI_CVI\"], \"bootstrap_b\": 25,"
                       " \"plots\": \"" + plots_csv + "\"}");

  const std::string out1 = td.path("out1");
  const std::string out2 = td.path("out2");
  CHECK(run_cli(td, "fit --config " + fit_cfg + " --out " + out1).code == 0);
  CHECK(run_cli(td, "fit --config " + fit_cfg + " --out " + out2).code == 0);

  const std::string arch1 = out1 + "/F_ZI_CVI";
  const std::string arch2 = out2 + "/F_ZI_CVI";
  REQUIRE(std::filesystem::exists(arch1 + "/manifest.json"));
  CHECK(fixtures::read_text(arch1 + "/manifest.json") ==
        fixtures::read_text(arch2 + "/manifest.json"));
  CHECK(fixtures::read_text(arch1 + "/estimates.csv") ==
        fixtures::read_text(arch2 + "/estimates.csv"));
  CHECK(fixtures::read_text(arch1 + "/sample.csv") == fixtures::read_text(arch2 + "/sample.csv"));

  const std::string pred_cfg = td.path("predict.json");
  fixtures::write_text(pred_cfg,
                       "{\"seed\": 31,"
                       " \"predict\": {\"archive\": \"" + arch1 + "\","
                       " \"grid\": \"" + grid_csv + "\", \"unit_csv\": true}}");
  const std::string pred_out = td.path("pred_out");
  CHECK(run_cli(td, "predict --config " + pred_cfg + " --out " + pred_out).code == 0);
  const auto county_lines = nonempty_lines(fixtures::read_text(pred_out + "/counties.csv"));
  REQUIRE(county_lines.size() == 4);
  CHECK(split_csv_row(county_lines[0])[0] == "county");
  const auto unit_lines = nonempty_lines(fixtures::read_text(pred_out + "/units.csv"));
  CHECK(unit_lines.size() == 13);

  sae::CountyTable wide;
  for (const auto& name : {"c0", "c1", "c2", "zeta"}) wide.intern(name);
  sae::GridData stranger = demo_grid(2, 4, 9);
  const std::string stranger_csv = td.path("stranger.csv");
  sae::write_grid(stranger_csv, stranger, wide);
  const std::string pred_bad = td.path("predict_bad.json");
  fixtures::write_text(pred_bad,
                       "{\"seed\": 31,"
                       " \"predict\": {\"archive\": \"" + arch1 + "\","
                       " \"grid\": \"" + stranger_csv + "\"}}");
  CHECK(run_cli(td, "predict --config " + pred_bad + " --out " + td.path("pred_bad")).code == 3);

  const std::string cv_cfg = td.path("cv.json");
  fixtures::write_text(cv_cfg,
                       "{\"seed\": 31, \"root\": 2,"
                       " \"predictors_x\": [\"tcc\"], \"predictors_v\": [\"tcc\"],"
                       " \"models\": [\"F_ZI_CVI\"], \"bootstrap_b\": 25,"
                       " \"plots\": \"" + plots_csv + "\"}");
  const std::string cv_out1 = td.path("cv_out1");
  const std::string cv_out2 = td.path("cv_out2");
  CHECK(run_cli(td, "cv --config " + cv_cfg + " --out " + cv_out1).code == 0);
  CHECK(run_cli(td, "cv --config " + cv_cfg + " --out " + cv_out2).code == 0);
  const std::string cv_text = fixtures::read_text(cv_out1 + "/cv_metrics.csv");
  CHECK(cv_text == fixtures::read_text(cv_out2 + "/cv_metrics.csv"));
  const auto cv_lines = nonempty_lines(cv_text);
  REQUIRE(cv_lines.size() == 2);
  CHECK(cv_lines[0] == "estimator,rmspe,bias,coverage,n,k_folds");
  const auto row = split_csv_row(cv_lines[1]);
  REQUIRE(row.size() == 6);
  CHECK(row[0] == "F_ZI_CVI");
  CHECK(row[3] == "");
  CHECK(row[4] == "24");
  CHECK(row[5] == "10");
}

TEST_CASE("cli reports non-convergence with exit code five but still archives") {
  fixtures::TempDir td;
  sae::CountyTable counties;
  const sae::PlotData plots = demo_plots(24, 3, counties, 2024);
  const std::string plots_csv = td.path("plots.csv");
  sae::write_plots(plots_csv, plots, counties);

  const std::string cfg = td.path("fit.json");
  fixtures::write_text(cfg,
                       "{\"seed\": 31, \"root\": 2,"
                       " \"predictors_x\": [\"tcc\"], \"predictors_v\": [\"tcc\"],"
                       " \"models\": [\"B_CVI\"],"
                       " \"mcmc\": {\"chains\": 2, \"iterations\": 200, \"burn_in\": 50,"
                       " \"thin\": 1, \"psrf_threshold\": 1.0000001},"
                       " \"plots\": \"" + plots_csv + "\"}");
  const std::string out = td.path("out");
  const CliRun r = run_cli(td, "fit --config " + cfg + " --out " + out);
  CHECK(r.code == 5);
  const std::string manifest_path = out + "/B_CVI/manifest.json";
  REQUIRE(std::filesystem::exists(manifest_path));
  const auto man = nlohmann::json::parse(fixtures::read_text(manifest_path));
  CHECK_FALSE(man.at("converged").get<bool>());
  CHECK(man.at("mcmc").at("M").get<int>() == 300);
  CHECK(std::filesystem::exists(out + "/B_CVI/params.csv"));
}

TEST_CASE("cli simulate scores the oracle fixture perfectly on a synthetic scene") {
  fixtures::TempDir td;
  const std::string cfg = td.path("sim.json");
  fixtures::write_text(cfg,
                       "{\"seed\": 9, \"root\": 2, \"bootstrap_b\": 20,"
                       " \"models\": [\"F_ZI_CVI\"],"
                       " \"simulation\": {\"synthetic\": true, \"grid_side\": 12,"
                       " \"n_donors\": 80, \"k\": 3, \"d\": 2,"
                       " \"size_per_county\": 8, \"oracle_truth\": true}}");
  const std::string out = td.path("out");
  const CliRun r = run_cli(td, "simulate --config " + cfg + " --out " + out);
  CHECK(r.code == 0);
  const std::string metrics = out + "/simulation_metrics.csv";
  REQUIRE(std::filesystem::exists(metrics));
  const auto lines = nonempty_lines(fixtures::read_text(metrics));
  REQUIRE(lines.size() == 1 + 2 * 12);
  CHECK(lines[0] == "estimator,county,rmse,bias,rmse_hat_bias,coverage,replicates,failures,d");
  int oracle_rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = split_csv_row(lines[i]);
    REQUIRE(row.size() == 9);
    if (row[0] != "ORACLE_TRUTH") continue;
    ++oracle_rows;
    CHECK(std::stod(row[2]) == 0.0);
    CHECK(std::abs(std::stod(row[3])) < 1e-12);
    CHECK(std::stod(row[5]) == 1.0);
    CHECK(row[6] == "2");
    CHECK(row[7] == "0");
  }
  CHECK(oracle_rows == 12);
}
