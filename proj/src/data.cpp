#include "sae/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sae/csv.hpp"
#include "sae/errors.hpp"

namespace sae {

int CountyTable::intern(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, idx);
  n_obs.push_back(0);
  n_grid.push_back(0);
  return idx;
}

int CountyTable::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

const std::string& CountyTable::name(int index) const {
  return names_.at(static_cast<std::size_t>(index));
}

ModelSpec ModelSpec::from_name(const std::string& name) {
  std::vector<std::string> tokens;
  std::stringstream ss(name);
  std::string tok;
  while (std::getline(ss, tok, '_')) tokens.push_back(tok);
  auto bad = [&] { throw ConfigError("unknown model name '" + name + "'"); };
  if (tokens.size() < 2) bad();
  ModelSpec spec;
  std::size_t i = 0;
  if (tokens[i] == "F") spec.paradigm = Paradigm::frequentist;
  else if (tokens[i] == "B") spec.paradigm = Paradigm::bayesian;
  else bad();
  ++i;
  if (i < tokens.size() && tokens[i] == "ZI") { spec.two_stage = true; ++i; }
  if (i >= tokens.size()) bad();
  if (tokens[i] == "CVI") spec.varying_coefficients = false;
  else if (tokens[i] == "CVC") spec.varying_coefficients = true;
  else bad();
  ++i;
  if (i < tokens.size() && tokens[i] == "SVI") { spec.spatial_intercept = true; ++i; }
  if (i < tokens.size() && tokens[i] == "CRV") { spec.county_residual_variance = true; ++i; }
  if (i != tokens.size()) bad();
  spec.validate();
  return spec;
}

std::string ModelSpec::name() const {
  std::string out = paradigm == Paradigm::frequentist ? "F" : "B";
  if (two_stage) out += "_ZI";
  out += varying_coefficients ? "_CVC" : "_CVI";
  if (spatial_intercept) out += "_SVI";
  if (county_residual_variance) out += "_CRV";
  return out;
}

void ModelSpec::validate() const {
  auto fail = [&](const std::string& why) {
    throw ConfigError("illegal model combination " + name() + ": " + why);
  };
  if (paradigm == Paradigm::frequentist) {
    if (!two_stage) fail("frequentist models are two-stage only");
    if (varying_coefficients) fail("frequentist models use a varying intercept only");
    if (county_residual_variance || spatial_intercept)
      fail("frequentist models support neither CRV nor SVI");
  } else {
    if (spatial_intercept && !(two_stage && county_residual_variance))
      fail("SVI requires ZI and CRV");
    if (county_residual_variance && !two_stage) fail("CRV requires ZI");
  }
  if (spatial_intercept && nngp_neighbors < 1)
    fail("nngp_neighbors must be at least 1");
}

std::vector<ModelSpec> all_model_specs() {
  std::vector<ModelSpec> specs;
  for (const char* n : {"F_ZI_CVI", "B_CVI", "B_CVC", "B_ZI_CVI", "B_ZI_CVC",
                        "B_ZI_CVI_CRV", "B_ZI_CVC_CRV", "B_ZI_CVI_SVI_CRV",
                        "B_ZI_CVC_SVI_CRV"})
    specs.push_back(ModelSpec::from_name(n));
  return specs;
}

namespace {

struct ColumnIndex {
  int id = -1, x = -1, y = -1, county = -1, biomass = -1;
  std::vector<int> px, pv;
};

ColumnIndex resolve_columns(const csv::Table& table, const ColumnSchema& schema,
                            const std::string& path, bool with_id_biomass) {
  ColumnIndex ix;
  auto need = [&](const std::string& name) {
    int c = table.column(name);
    if (c < 0) throw DataError(path + ": missing required column '" + name + "'");
    return c;
  };
  if (with_id_biomass) {
    ix.id = need("id");
    ix.biomass = need("biomass_mg_ha");
  }
  ix.x = need("x_km");
  ix.y = need("y_km");
  ix.county = need("county");
  for (const auto& name : schema.predictors_x) ix.px.push_back(need(name));
  for (const auto& name : schema.predictors_v) ix.pv.push_back(need(name));
  return ix;
}

int resolve_county(const std::string& name, CountyTable& counties, bool allow_new,
                   const std::string& path, std::size_t row) {
  if (allow_new) return counties.intern(name);
  int idx = counties.index_of(name);
  if (idx < 0)
    throw DataError(path + ": row " + std::to_string(row) + ": unknown county '" + name + "'");
  return idx;
}

}  // namespace

PlotData load_plots(const std::string& path, const ColumnSchema& schema,
                    CountyTable& counties, bool allow_new_counties) {
  csv::Table table = csv::read_file(path);
  if (table.rows.empty()) throw DataError(path + ": no records");
  ColumnIndex ix = resolve_columns(table, schema, path, true);
  PlotData data;
  data.schema = schema;
  data.records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t rn = r + 1;
    PlotRecord rec;
    try {
      rec.id = row[ix.id];
      rec.x = csv::parse_double(row[ix.x], "x_km", rn);
      rec.y = csv::parse_double(row[ix.y], "y_km", rn);
      rec.biomass = csv::parse_double(row[ix.biomass], "biomass_mg_ha", rn);
      for (std::size_t k = 0; k < ix.px.size(); ++k)
        rec.predictors_x.push_back(
            csv::parse_double(row[ix.px[k]], schema.predictors_x[k], rn));
      for (std::size_t k = 0; k < ix.pv.size(); ++k)
        rec.predictors_v.push_back(
            csv::parse_double(row[ix.pv[k]], schema.predictors_v[k], rn));
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
    if (!std::isfinite(rec.x) || !std::isfinite(rec.y))
      throw DataError(path + ": row " + std::to_string(rn) + ": non-finite coordinate");
    if (!(rec.biomass >= 0.0))
      throw DataError(path + ": row " + std::to_string(rn) + ": biomass " +
                      csv::format_double(rec.biomass) + " is negative");
    rec.county_id = resolve_county(row[ix.county], counties, allow_new_counties, path, rn);
    counties.n_obs[rec.county_id] += 1;
    data.records.push_back(std::move(rec));
  }
  return data;
}

GridData load_grid(const std::string& path, const ColumnSchema& schema,
                   CountyTable& counties, bool allow_new_counties) {
  csv::Table table = csv::read_file(path);
  if (table.rows.empty()) throw DataError(path + ": no records");
  ColumnIndex ix = resolve_columns(table, schema, path, false);
  GridData data;
  data.schema = schema;
  data.units.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t rn = r + 1;
    GridUnit u;
    try {
      u.x = csv::parse_double(row[ix.x], "x_km", rn);
      u.y = csv::parse_double(row[ix.y], "y_km", rn);
      for (std::size_t k = 0; k < ix.px.size(); ++k)
        u.predictors_x.push_back(
            csv::parse_double(row[ix.px[k]], schema.predictors_x[k], rn));
      for (std::size_t k = 0; k < ix.pv.size(); ++k)
        u.predictors_v.push_back(
            csv::parse_double(row[ix.pv[k]], schema.predictors_v[k], rn));
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
    if (!std::isfinite(u.x) || !std::isfinite(u.y))
      throw DataError(path + ": row " + std::to_string(rn) + ": non-finite coordinate");
    u.county_id = resolve_county(row[ix.county], counties, allow_new_counties, path, rn);
    counties.n_grid[u.county_id] += 1;
    data.units.push_back(std::move(u));
  }
  return data;
}

void write_plots(const std::string& path, const PlotData& data, const CountyTable& counties) {
  csv::Writer out(path);
  std::vector<std::string> row = {"id", "x_km", "y_km", "county", "biomass_mg_ha"};
  for (const auto& n : data.schema.predictors_x) row.push_back(n);
  for (const auto& n : data.schema.predictors_v) row.push_back(n);
  out.write_row(row);
  for (const auto& rec : data.records) {
    row.clear();
    row.push_back(rec.id);
    row.push_back(csv::format_double(rec.x));
    row.push_back(csv::format_double(rec.y));
    row.push_back(counties.name(rec.county_id));
    row.push_back(csv::format_double(rec.biomass));
    for (double v : rec.predictors_x) row.push_back(csv::format_double(v));
    for (double v : rec.predictors_v) row.push_back(csv::format_double(v));
    out.write_row(row);
  }
}

void write_grid(const std::string& path, const GridData& data, const CountyTable& counties) {
  csv::Writer out(path);
  std::vector<std::string> row = {"x_km", "y_km", "county"};
  for (const auto& n : data.schema.predictors_x) row.push_back(n);
  for (const auto& n : data.schema.predictors_v) row.push_back(n);
  out.write_row(row);
  for (const auto& u : data.units) {
    row.clear();
    row.push_back(csv::format_double(u.x));
    row.push_back(csv::format_double(u.y));
    row.push_back(counties.name(u.county_id));
    for (double v : u.predictors_x) row.push_back(csv::format_double(v));
    for (double v : u.predictors_v) row.push_back(csv::format_double(v));
    out.write_row(row);
  }
}

std::vector<int> county_counts(const std::vector<PlotRecord>& records, int n_counties) {
  std::vector<int> counts(static_cast<std::size_t>(n_counties), 0);
  for (const auto& r : records) counts.at(static_cast<std::size_t>(r.county_id)) += 1;
  return counts;
}

std::vector<int> county_counts(const std::vector<GridUnit>& units, int n_counties) {
  std::vector<int> counts(static_cast<std::size_t>(n_counties), 0);
  for (const auto& u : units) counts.at(static_cast<std::size_t>(u.county_id)) += 1;
  return counts;
}

namespace {

std::vector<const std::string*> unique_names(const ColumnSchema& schema) {
  std::vector<const std::string*> names;
  auto add = [&](const std::string& n) {
    for (const auto* p : names)
      if (*p == n) return;
    names.push_back(&n);
  };
  for (const auto& n : schema.predictors_x) add(n);
  for (const auto& n : schema.predictors_v) add(n);
  return names;
}

template <typename Rec>
void collect_column(const std::vector<Rec>& records, const ColumnSchema& schema,
                    const std::string& name, std::vector<double>& out) {
  for (std::size_t k = 0; k < schema.predictors_x.size(); ++k)
    if (schema.predictors_x[k] == name) {
      for (const auto& r : records) out.push_back(r.predictors_x[k]);
      return;
    }
  for (std::size_t k = 0; k < schema.predictors_v.size(); ++k)
    if (schema.predictors_v[k] == name) {
      for (const auto& r : records) out.push_back(r.predictors_v[k]);
      return;
    }
}

template <typename Rec>
void apply_stats(std::vector<Rec>& records, const ColumnSchema& schema,
                 const PredictorStats& stats) {
  for (std::size_t k = 0; k < schema.predictors_x.size(); ++k) {
    const ColumnStats& cs = stats.at(schema.predictors_x[k]);
    for (auto& r : records) r.predictors_x[k] = (r.predictors_x[k] - cs.mean) / cs.sd;
  }
  for (std::size_t k = 0; k < schema.predictors_v.size(); ++k) {
    const ColumnStats& cs = stats.at(schema.predictors_v[k]);
    for (auto& r : records) r.predictors_v[k] = (r.predictors_v[k] - cs.mean) / cs.sd;
  }
}

}  // namespace

PredictorStats standardize_predictors(std::vector<PlotRecord>& records,
                                      const ColumnSchema& schema,
                                      const PredictorStats* stats,
                                      const std::set<std::string>& declared_constant) {
  PredictorStats fitted;
  if (stats) {
    fitted = *stats;
  } else {
    if (records.size() < 2)
      throw DataError("standardize: need at least 2 records to fit moments");
    for (const auto* name : unique_names(schema)) {
      std::vector<double> col;
      collect_column(records, schema, *name, col);
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
      ColumnStats cs;
      cs.mean = mean;
      if (sd > 0.0) {
        cs.sd = sd;
      } else if (declared_constant.count(*name)) {
        cs.sd = 1.0;
        cs.constant = true;
      } else {
        throw DataError("standardize: column '" + *name +
                        "' has zero variance and is not declared constant");
      }
      fitted.emplace(*name, cs);
    }
  }
  apply_stats(records, schema, fitted);
  return fitted;
}

void standardize_grid(std::vector<GridUnit>& units, const ColumnSchema& schema,
                      const PredictorStats& stats) {
  apply_stats(units, schema, stats);
}

std::vector<int> derive_presence(const std::vector<PlotRecord>& records) {
  std::vector<int> z;
  z.reserve(records.size());
  int positives = 0;
  for (const auto& r : records) {
    int zi = r.biomass > 0.0 ? 1 : 0;
    positives += zi;
    z.push_back(zi);
  }
  if (!records.empty() && positives == 0) warn("continuous stage has no data");
  return z;
}

Eigen::MatrixXd design_x(const std::vector<PlotRecord>& records) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto p = records.empty() ? 0 : static_cast<Eigen::Index>(records[0].predictors_x.size());
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < p; ++k)
      X(i, k) = records[static_cast<std::size_t>(i)].predictors_x[static_cast<std::size_t>(k)];
  return X;
}

Eigen::MatrixXd design_v(const std::vector<PlotRecord>& records) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto q = records.empty() ? 0 : static_cast<Eigen::Index>(records[0].predictors_v.size());
  Eigen::MatrixXd V(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < q; ++k)
      V(i, k) = records[static_cast<std::size_t>(i)].predictors_v[static_cast<std::size_t>(k)];
  return V;
}

Eigen::VectorXd biomass_vector(const std::vector<PlotRecord>& records) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(records.size()));
  for (Eigen::Index i = 0; i < b.size(); ++i)
    b[i] = records[static_cast<std::size_t>(i)].biomass;
  return b;
}

}  // namespace sae
