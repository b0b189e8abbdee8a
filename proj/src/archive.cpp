#include "sae/archive.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sae/csv.hpp"
#include "sae/errors.hpp"
#include "sae/nngp.hpp"
#include "sae/predict.hpp"

namespace sae {

namespace {

using nlohmann::json;

json manifest_to_json(const ArchiveManifest& m) {
  json st = json::object();
  for (const auto& [name, cs] : m.standardization)
    st[name] = {{"mean", cs.mean}, {"sd", cs.sd}, {"constant", cs.constant}};
  json j;
  j["format_version"] = m.format_version;
  j["model"] = m.model;
  j["paradigm"] = m.paradigm;
  j["config_hash"] = m.config_hash;
  j["root"] = m.root;
  j["seed"] = m.seed;
  j["counties"] = m.counties;
  j["predictors_x"] = m.predictors_x;
  j["predictors_v"] = m.predictors_v;
  j["standardization"] = st;
  j["priors"] = {{"var_fixed", m.priors.var_fixed},   {"ig_shape", m.priors.ig_shape},
                 {"ig_scale", m.priors.ig_scale},     {"phi_lower", m.priors.phi_lower},
                 {"phi_upper", m.priors.phi_upper},   {"tau2_2", m.priors.tau2_2}};
  j["mcmc"] = {{"chains", m.chains},
               {"iterations", m.iterations},
               {"burn_in", m.burn_in},
               {"thin", m.thin},
               {"M", m.M}};
  j["bootstrap_b"] = m.bootstrap_b;
  j["predict_m"] = m.predict_m;
  j["converged"] = m.converged;
  j["max_psrf"] = m.max_psrf;
  j["n_w"] = m.n_w;
  return j;
}

ArchiveManifest manifest_from_json(const json& j) {
  ArchiveManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.model = j.at("model").get<std::string>();
    m.paradigm = j.at("paradigm").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.root = j.at("root").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.counties = j.at("counties").get<std::vector<std::string>>();
    m.predictors_x = j.at("predictors_x").get<std::vector<std::string>>();
    m.predictors_v = j.at("predictors_v").get<std::vector<std::string>>();
    for (const auto& item : j.at("standardization").items()) {
      ColumnStats cs;
      cs.mean = item.value().at("mean").get<double>();
      cs.sd = item.value().at("sd").get<double>();
      cs.constant = item.value().at("constant").get<bool>();
      m.standardization[item.key()] = cs;
    }
    const json& pr = j.at("priors");
    m.priors.var_fixed = pr.at("var_fixed").get<double>();
    m.priors.ig_shape = pr.at("ig_shape").get<double>();
    m.priors.ig_scale = pr.at("ig_scale").get<double>();
    m.priors.phi_lower = pr.at("phi_lower").get<double>();
    m.priors.phi_upper = pr.at("phi_upper").get<double>();
    m.priors.tau2_2 = pr.at("tau2_2").get<double>();
    const json& mc = j.at("mcmc");
    m.chains = mc.at("chains").get<int>();
    m.iterations = mc.at("iterations").get<int>();
    m.burn_in = mc.at("burn_in").get<int>();
    m.thin = mc.at("thin").get<int>();
    m.M = mc.at("M").get<int>();
    m.bootstrap_b = j.at("bootstrap_b").get<int>();
    m.predict_m = j.at("predict_m").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.max_psrf = j.at("max_psrf").get<double>();
    m.n_w = j.at("n_w").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("archive: malformed manifest: ") + e.what());
  }
  return m;
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m) {
  csv::Writer out(path);
  out.write_row(header);
  std::vector<std::string> row(header.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row[static_cast<std::size_t>(c)] = csv::format_double(m(r, c));
    out.write_row(row);
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* header) {
  csv::Table t = csv::read_file(path);
  if (header) *header = t.header;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          csv::parse_double(t.rows[r][c], t.header[c], r + 1);
  return m;
}

void scatter_params(const Eigen::MatrixXd& m, PosteriorDraws& d) {
  Eigen::Index c = 0;
  auto take_vec = [&](Eigen::VectorXd& v) { v = m.col(c++); };
  auto take_mat = [&](Eigen::MatrixXd& out) {
    for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) = m.col(c++);
  };
  if (d.spec.two_stage) {
    take_vec(d.alpha0);
    take_mat(d.alpha);
    take_mat(d.atilde0);
    take_vec(d.sigma2_a0);
  }
  take_vec(d.beta0);
  take_mat(d.beta);
  take_mat(d.btilde0);
  take_vec(d.sigma2_b0);
  if (d.spec.varying_coefficients) {
    for (int j = 0; j < d.J; ++j)
      for (int k = 0; k < d.p; ++k) d.btilde.col(j * d.p + k) = m.col(c++);
    take_mat(d.sigma2_bk);
  }
  take_mat(d.tau2);
  if (d.spec.spatial_intercept) {
    take_vec(d.sigma2_w);
    take_vec(d.phi);
  }
}

std::vector<std::pair<std::string, double>> freq_estimate_rows(const FittedEstimator& fit) {
  std::vector<std::pair<std::string, double>> rows;
  const LmmFit& lmm = *fit.lmm;
  const GlmmFit& glmm = *fit.glmm;
  rows.emplace_back("beta0", lmm.beta0_hat);
  for (Eigen::Index k = 0; k < lmm.beta_hat.size(); ++k)
    rows.emplace_back("beta[" + std::to_string(k) + "]", lmm.beta_hat[k]);
  rows.emplace_back("sigma2_b0", lmm.sigma2_b0_hat);
  rows.emplace_back("tau2", lmm.tau2_hat);
  rows.emplace_back("lambda", lmm.lambda_hat);
  for (Eigen::Index j = 0; j < lmm.blups.size(); ++j)
    rows.emplace_back("blup[" + std::to_string(j) + "]", lmm.blups[j]);
  rows.emplace_back("alpha0", glmm.alpha0_hat);
  for (Eigen::Index k = 0; k < glmm.alpha_hat.size(); ++k)
    rows.emplace_back("alpha[" + std::to_string(k) + "]", glmm.alpha_hat[k]);
  rows.emplace_back("sigma2_a0", glmm.sigma2_a0_hat);
  for (Eigen::Index j = 0; j < glmm.county_modes.size(); ++j)
    rows.emplace_back("mode[" + std::to_string(j) + "]", glmm.county_modes[j]);
  for (Eigen::Index k = 0; k < glmm.std_errors.size(); ++k)
    rows.emplace_back("se[" + std::to_string(k) + "]", glmm.std_errors[k]);
  rows.emplace_back("ridge_applied", glmm.ridge_applied ? 1.0 : 0.0);
  return rows;
}

}  // namespace

void write_posterior_summary(const std::string& path, const PosteriorDraws& draws) {
  csv::Writer out(path);
  out.write_row({"parameter", "mean", "q025", "q975"});
  auto names = param_names(draws);
  Eigen::MatrixXd m = param_matrix(draws);
  auto emit = [&](const std::string& name, const Eigen::VectorXd& col) {
    std::vector<double> v(col.data(), col.data() + col.size());
    out.write_row({name, csv::format_double(stable_mean(v)),
                   csv::format_double(quantile_type8(v, 0.025)),
                   csv::format_double(quantile_type8(v, 0.975))});
  };
  for (std::size_t k = 0; k < names.size(); ++k) {
    emit(names[k], m.col(static_cast<Eigen::Index>(k)));
    if (names[k] == "phi") {
      Eigen::VectorXd rng_km = draws.phi.unaryExpr([](double p) { return effective_range(p); });
      emit("effective_range_km", rng_km);
    }
  }
}

void write_archive(const std::string& dir, const ArchiveManifest& manifest,
                   const FittedEstimator& fit) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw DataError("archive: cannot write " + dir + "/manifest.json");
    out << manifest_to_json(manifest).dump(2) << "\n";
  }

  if (fit.bayes) {
    const PosteriorDraws& d = fit.bayes->draws;
    write_draws_csv(dir + "/params.csv", d);
    write_posterior_summary(dir + "/summary.csv", d);
    if (d.spec.spatial_intercept) {
      std::vector<std::string> wh;
      for (Eigen::Index k = 0; k < d.w.cols(); ++k) wh.push_back("w" + std::to_string(k));
      write_matrix_csv(dir + "/w.csv", wh, d.w);
      csv::Writer sites(dir + "/sites.csv");
      sites.write_row({"x_km", "y_km"});
      for (std::size_t i = 0; i < d.w_x.size(); ++i)
        sites.write_row({csv::format_double(d.w_x[i]), csv::format_double(d.w_y[i])});
    }
    return;
  }

  csv::Writer est(dir + "/estimates.csv");
  est.write_row({"parameter", "estimate"});
  for (const auto& [name, value] : freq_estimate_rows(fit))
    est.write_row({name, csv::format_double(value)});

  const SampleMatrices& s = fit.sample;
  std::vector<std::string> header{"county"};
  for (Eigen::Index k = 0; k < s.X.cols(); ++k) header.push_back("x" + std::to_string(k));
  for (Eigen::Index k = 0; k < s.V.cols(); ++k) header.push_back("v" + std::to_string(k));
  csv::Writer sample(dir + "/sample.csv");
  sample.write_row(header);
  for (std::size_t i = 0; i < s.county.size(); ++i) {
    std::vector<std::string> row{std::to_string(s.county[i])};
    for (Eigen::Index k = 0; k < s.X.cols(); ++k)
      row.push_back(csv::format_double(s.X(static_cast<Eigen::Index>(i), k)));
    for (Eigen::Index k = 0; k < s.V.cols(); ++k)
      row.push_back(csv::format_double(s.V(static_cast<Eigen::Index>(i), k)));
    sample.write_row(row);
  }
}

LoadedArchive load_archive(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw DataError("archive: cannot open " + dir + "/manifest.json");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("archive: manifest parse failure: ") + e.what());
  }
  LoadedArchive out;
  out.manifest = manifest_from_json(j);
  if (out.manifest.format_version != 1)
    throw DataError("archive: unsupported format version " +
                    std::to_string(out.manifest.format_version));
  for (const auto& name : out.manifest.counties) out.counties.intern(name);

  FittedEstimator& fit = out.fit;
  fit.J = static_cast<int>(out.manifest.counties.size());
  fit.cfg.spec = ModelSpec::from_name(out.manifest.model);
  fit.cfg.priors = out.manifest.priors;
  fit.cfg.mcmc.chains = out.manifest.chains;
  fit.cfg.mcmc.iterations = out.manifest.iterations;
  fit.cfg.mcmc.burn_in = out.manifest.burn_in;
  fit.cfg.mcmc.thin = out.manifest.thin;
  fit.cfg.bootstrap_B = out.manifest.bootstrap_b;
  fit.cfg.predict_m = out.manifest.predict_m;
  fit.cfg.root = out.manifest.root;
  fit.cfg.seed = out.manifest.seed;

  if (out.manifest.paradigm == "bayesian") {
    PosteriorDraws d;
    d.spec = fit.cfg.spec;
    d.M = out.manifest.M;
    d.J = fit.J;
    d.p = static_cast<int>(out.manifest.predictors_x.size());
    d.q = static_cast<int>(out.manifest.predictors_v.size());
    const int M = d.M, J = d.J, p = d.p, q = d.q;
    if (d.spec.two_stage) {
      d.alpha0.resize(M);
      d.alpha.resize(M, q);
      d.atilde0.resize(M, J);
      d.sigma2_a0.resize(M);
    }
    d.beta0.resize(M);
    d.beta.resize(M, p);
    d.btilde0.resize(M, J);
    d.sigma2_b0.resize(M);
    if (d.spec.varying_coefficients) {
      d.btilde.resize(M, J * p);
      d.sigma2_bk.resize(M, p);
    }
    d.tau2.resize(M, d.spec.county_residual_variance ? J : 1);
    if (d.spec.spatial_intercept) {
      d.sigma2_w.resize(M);
      d.phi.resize(M);
    }
    std::vector<std::string> header;
    Eigen::MatrixXd m = read_matrix_csv(dir + "/params.csv", &header);
    auto expected = param_names(d);
    if (header != expected || m.rows() != M)
      throw DataError("archive: params.csv does not match the manifest layout");
    scatter_params(m, d);
    if (d.spec.spatial_intercept) {
      std::vector<std::string> wh;
      d.w = read_matrix_csv(dir + "/w.csv", &wh);
      if (d.w.rows() != M || d.w.cols() != out.manifest.n_w)
        throw DataError("archive: w.csv does not match the manifest layout");
      csv::Table sites = csv::read_file(dir + "/sites.csv");
      int cx = sites.column("x_km"), cy = sites.column("y_km");
      if (cx < 0 || cy < 0 || static_cast<int>(sites.rows.size()) != out.manifest.n_w)
        throw DataError("archive: sites.csv does not match the manifest layout");
      for (std::size_t r = 0; r < sites.rows.size(); ++r) {
        d.w_x.push_back(csv::parse_double(sites.rows[r][static_cast<std::size_t>(cx)], "x_km", r + 1));
        d.w_y.push_back(csv::parse_double(sites.rows[r][static_cast<std::size_t>(cy)], "y_km", r + 1));
      }
    }
    FitResult res;
    res.draws = std::move(d);
    res.diagnostics.converged = out.manifest.converged;
    res.diagnostics.max_psrf = out.manifest.max_psrf;
    fit.bayes = std::move(res);
    return out;
  }
  if (out.manifest.paradigm != "frequentist")
    throw DataError("archive: unknown paradigm '" + out.manifest.paradigm + "'");

  csv::Table est = csv::read_file(dir + "/estimates.csv");
  int cn = est.column("parameter"), cv = est.column("estimate");
  if (cn < 0 || cv < 0) throw DataError("archive: estimates.csv lacks required columns");
  std::map<std::string, double> vals;
  for (std::size_t r = 0; r < est.rows.size(); ++r)
    vals[est.rows[r][static_cast<std::size_t>(cn)]] =
        csv::parse_double(est.rows[r][static_cast<std::size_t>(cv)], "estimate", r + 1);
  auto need = [&](const std::string& name) {
    auto it = vals.find(name);
    if (it == vals.end()) throw DataError("archive: estimates.csv missing " + name);
    return it->second;
  };
  const int p = static_cast<int>(out.manifest.predictors_x.size());
  const int q = static_cast<int>(out.manifest.predictors_v.size());
  LmmFit lmm;
  lmm.beta0_hat = need("beta0");
  lmm.beta_hat.resize(p);
  for (int k = 0; k < p; ++k) lmm.beta_hat[k] = need("beta[" + std::to_string(k) + "]");
  lmm.sigma2_b0_hat = need("sigma2_b0");
  lmm.tau2_hat = need("tau2");
  lmm.lambda_hat = need("lambda");
  lmm.blups.resize(fit.J);
  for (int k = 0; k < fit.J; ++k) lmm.blups[k] = need("blup[" + std::to_string(k) + "]");
  GlmmFit glmm;
  glmm.alpha0_hat = need("alpha0");
  glmm.alpha_hat.resize(q);
  for (int k = 0; k < q; ++k) glmm.alpha_hat[k] = need("alpha[" + std::to_string(k) + "]");
  glmm.sigma2_a0_hat = need("sigma2_a0");
  glmm.county_modes.resize(fit.J);
  for (int k = 0; k < fit.J; ++k) glmm.county_modes[k] = need("mode[" + std::to_string(k) + "]");
  glmm.std_errors.resize(q + 1);
  for (int k = 0; k <= q; ++k) glmm.std_errors[k] = need("se[" + std::to_string(k) + "]");
  glmm.ridge_applied = need("ridge_applied") != 0.0;
  fit.lmm = std::move(lmm);
  fit.glmm = std::move(glmm);

  csv::Table sample = csv::read_file(dir + "/sample.csv");
  int cc = sample.column("county");
  if (cc < 0) throw DataError("archive: sample.csv lacks a county column");
  const Eigen::Index n = static_cast<Eigen::Index>(sample.rows.size());
  fit.sample.X.resize(n, p);
  fit.sample.V.resize(n, q);
  fit.sample.J = fit.J;
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    fit.sample.county.push_back(static_cast<int>(
        csv::parse_double(sample.rows[r][static_cast<std::size_t>(cc)], "county", r + 1)));
    for (int k = 0; k < p; ++k) {
      int col = sample.column("x" + std::to_string(k));
      if (col < 0) throw DataError("archive: sample.csv lacks column x" + std::to_string(k));
      fit.sample.X(static_cast<Eigen::Index>(r), k) =
          csv::parse_double(sample.rows[r][static_cast<std::size_t>(col)], "x", r + 1);
    }
    for (int k = 0; k < q; ++k) {
      int col = sample.column("v" + std::to_string(k));
      if (col < 0) throw DataError("archive: sample.csv lacks column v" + std::to_string(k));
      fit.sample.V(static_cast<Eigen::Index>(r), k) =
          csv::parse_double(sample.rows[r][static_cast<std::size_t>(col)], "v", r + 1);
    }
  }
  return out;
}

}  // namespace sae
