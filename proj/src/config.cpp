#include "sae/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sae/errors.hpp"
#include "sae/rng.hpp"

namespace sae {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) {
    try {
      into = obj.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
    }
  }
}

std::vector<std::string> read_string_list(const json& obj, const char* key) {
  std::vector<std::string> out;
  read_field(obj, key, out);
  return out;
}

void parse_priors(const json& obj, Priors& p) {
  reject_unknown(obj, "priors", {"var_fixed", "ig_shape", "ig_scale", "phi_lower", "phi_upper",
                                 "tau2_2"});
  read_field(obj, "var_fixed", p.var_fixed);
  read_field(obj, "ig_shape", p.ig_shape);
  read_field(obj, "ig_scale", p.ig_scale);
  read_field(obj, "phi_lower", p.phi_lower);
  read_field(obj, "phi_upper", p.phi_upper);
  read_field(obj, "tau2_2", p.tau2_2);
}

void parse_mcmc(const json& obj, McmcConfig& m) {
  reject_unknown(obj, "mcmc",
                 {"chains", "iterations", "burn_in", "thin", "psrf_threshold", "chain_seeds"});
  read_field(obj, "chains", m.chains);
  read_field(obj, "iterations", m.iterations);
  read_field(obj, "burn_in", m.burn_in);
  read_field(obj, "thin", m.thin);
  read_field(obj, "psrf_threshold", m.psrf_threshold);
  read_field(obj, "chain_seeds", m.chain_seeds);
}

void parse_sim(const json& obj, SimBlock& s) {
  reject_unknown(obj, "simulation",
                 {"synthetic", "grid_side", "n_donors", "scene_seed", "pixels", "donors",
                  "stratify_by", "stratify_threshold", "k", "d", "sizes", "size_per_county",
                  "oracle_truth"});
  read_field(obj, "synthetic", s.synthetic);
  read_field(obj, "grid_side", s.grid_side);
  read_field(obj, "n_donors", s.n_donors);
  read_field(obj, "scene_seed", s.scene_seed);
  read_field(obj, "pixels", s.pixels);
  read_field(obj, "donors", s.donors);
  read_field(obj, "stratify_by", s.stratify_by);
  read_field(obj, "stratify_threshold", s.stratify_threshold);
  read_field(obj, "k", s.k);
  read_field(obj, "d", s.d);
  read_field(obj, "sizes", s.sizes);
  read_field(obj, "size_per_county", s.size_per_county);
  read_field(obj, "oracle_truth", s.oracle_truth);
}

void require_path(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("config: missing " + what + " path");
  if (!std::filesystem::exists(path))
    throw ConfigError("config: " + what + " path does not exist: " + path);
}

// out and workers are excluded: neither changes results, so the hash
// identifies the statistical run.
json effective_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["root"] = c.transform_root;
  j["predictors_x"] = c.predictors_x;
  j["predictors_v"] = c.predictors_v;
  j["constant_predictors"] = std::vector<std::string>(c.constant_predictors.begin(),
                                                      c.constant_predictors.end());
  j["models"] = c.models;
  j["priors"] = {{"var_fixed", c.priors.var_fixed},   {"ig_shape", c.priors.ig_shape},
                 {"ig_scale", c.priors.ig_scale},     {"phi_lower", c.priors.phi_lower},
                 {"phi_upper", c.priors.phi_upper},   {"tau2_2", c.priors.tau2_2}};
  j["mcmc"] = {{"chains", c.mcmc.chains},
               {"iterations", c.mcmc.iterations},
               {"burn_in", c.mcmc.burn_in},
               {"thin", c.mcmc.thin},
               {"psrf_threshold", c.mcmc.psrf_threshold},
               {"chain_seeds", c.mcmc.chain_seeds}};
  j["bootstrap_b"] = c.bootstrap_b;
  j["predict_m"] = c.predict_m;
  j["nngp_m"] = c.nngp_m;
  j["plots"] = c.plots;
  j["predict"] = {{"archive", c.predict.archive},
                  {"grid", c.predict.grid},
                  {"unit_csv", c.predict.unit_csv}};
  j["simulation"] = {{"synthetic", c.sim.synthetic},
                     {"grid_side", c.sim.grid_side},
                     {"n_donors", c.sim.n_donors},
                     {"scene_seed", c.sim.scene_seed},
                     {"pixels", c.sim.pixels},
                     {"donors", c.sim.donors},
                     {"stratify_by", c.sim.stratify_by},
                     {"stratify_threshold", c.sim.stratify_threshold},
                     {"k", c.sim.k},
                     {"d", c.sim.d},
                     {"sizes", c.sim.sizes},
                     {"size_per_county", c.sim.size_per_county},
                     {"oracle_truth", c.sim.oracle_truth}};
  j["cv"] = {{"k_folds", c.cv.k_folds}};
  return j;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: parse failure in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, "top level",
                 {"seed", "out", "workers", "root", "predictors_x", "predictors_v",
                  "constant_predictors", "models", "priors", "mcmc", "bootstrap_b", "predict_m",
                  "nngp_m", "plots", "predict", "simulation", "cv"});

  RunConfig c;
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.seed_set = true;
  }
  read_field(j, "out", c.out);
  read_field(j, "workers", c.workers);
  read_field(j, "root", c.transform_root);
  c.predictors_x = read_string_list(j, "predictors_x");
  c.predictors_v = read_string_list(j, "predictors_v");
  for (const auto& s : read_string_list(j, "constant_predictors")) c.constant_predictors.insert(s);
  c.models = read_string_list(j, "models");
  if (j.contains("priors")) parse_priors(j.at("priors"), c.priors);
  if (j.contains("mcmc")) parse_mcmc(j.at("mcmc"), c.mcmc);
  read_field(j, "bootstrap_b", c.bootstrap_b);
  read_field(j, "predict_m", c.predict_m);
  read_field(j, "nngp_m", c.nngp_m);
  read_field(j, "plots", c.plots);
  if (j.contains("predict")) {
    const json& p = j.at("predict");
    reject_unknown(p, "predict", {"archive", "grid", "unit_csv"});
    read_field(p, "archive", c.predict.archive);
    read_field(p, "grid", c.predict.grid);
    read_field(p, "unit_csv", c.predict.unit_csv);
  }
  if (j.contains("simulation")) parse_sim(j.at("simulation"), c.sim);
  if (j.contains("cv")) {
    const json& p = j.at("cv");
    reject_unknown(p, "cv", {"k_folds"});
    read_field(p, "k_folds", c.cv.k_folds);
  }
  return c;
}

void validate_config(const RunConfig& cfg, const std::string& command) {
  if (!cfg.seed_set) throw ConfigError("config: seed is mandatory");
  if (cfg.transform_root != 2 && cfg.transform_root != 4)
    throw ConfigError("config: root must be 2 or 4");
  if (cfg.workers < 0) throw ConfigError("config: workers must be nonnegative");
  if (cfg.bootstrap_b < 2) throw ConfigError("config: bootstrap_b must be at least 2");
  if (cfg.predict_m < 1 || cfg.nngp_m < 1)
    throw ConfigError("config: neighbor counts must be positive");
  cfg.priors.validate();
  cfg.mcmc.validate();

  auto check_models = [&] {
    if (cfg.models.empty()) throw ConfigError("config: models list is empty");
    for (const auto& name : cfg.models) ModelSpec::from_name(name).validate();
  };

  if (command == "fit") {
    require_path(cfg.plots, "plots");
    if (cfg.predictors_x.empty() || cfg.predictors_v.empty())
      throw ConfigError("config: predictors_x and predictors_v are required");
    check_models();
  } else if (command == "predict") {
    require_path(cfg.predict.archive, "archive");
    require_path(cfg.predict.grid, "grid");
  } else if (command == "simulate") {
    if (cfg.sim.d < 2) throw ConfigError("config: simulation d must be at least 2");
    if (cfg.sim.k < 1) throw ConfigError("config: simulation k must be at least 1");
    if (!cfg.sim.synthetic) {
      require_path(cfg.sim.pixels, "simulation pixels");
      require_path(cfg.sim.donors, "simulation donors");
      if (cfg.predictors_x.empty() || cfg.predictors_v.empty())
        throw ConfigError("config: predictors_x and predictors_v are required");
      if (cfg.sim.stratify_by.empty())
        throw ConfigError("config: simulation stratify_by is required for file inputs");
    }
    if (cfg.sim.sizes.empty() && cfg.sim.size_per_county < 1)
      throw ConfigError("config: simulation needs sizes or size_per_county");
    if (cfg.models.empty() && !cfg.sim.oracle_truth)
      throw ConfigError("config: models list is empty");
    for (const auto& name : cfg.models) ModelSpec::from_name(name).validate();
  } else if (command == "cv") {
    require_path(cfg.plots, "plots");
    if (cfg.predictors_x.empty() || cfg.predictors_v.empty())
      throw ConfigError("config: predictors_x and predictors_v are required");
    if (cfg.cv.k_folds < 2) throw ConfigError("config: cv k_folds must be at least 2");
    check_models();
  } else {
    throw ConfigError("config: unknown command '" + command + "'");
  }
}

std::string canonical_config(const RunConfig& cfg) { return effective_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) {
  std::string s = canonical_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace sae
