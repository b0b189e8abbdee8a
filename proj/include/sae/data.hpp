#pragma once

#include <Eigen/Dense>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace sae {

// One observed inventory unit. Coordinates are projected planar km; the
// loader does not reproject. Zero biomass is exact equality with 0.0.
struct PlotRecord {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  int county_id = -1;
  double biomass = 0.0;
  std::vector<double> predictors_x;  // continuous-stage predictors
  std::vector<double> predictors_v;  // Bernoulli-stage predictors
};

struct GridUnit {
  double x = 0.0;
  double y = 0.0;
  int county_id = -1;
  std::vector<double> predictors_x;
  std::vector<double> predictors_v;
};

// County ids in input files are arbitrary strings, interned to dense
// 0..J-1 indices so random-effect vectors can index by position.
class CountyTable {
 public:
  int intern(const std::string& name);
  int index_of(const std::string& name) const;  // -1 when absent
  const std::string& name(int index) const;
  int size() const { return static_cast<int>(names_.size()); }

  std::vector<int> n_obs;   // per-county observed sample sizes
  std::vector<int> n_grid;  // per-county grid sizes

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct ColumnSchema {
  std::vector<std::string> predictors_x;
  std::vector<std::string> predictors_v;
};

enum class Paradigm { frequentist, bayesian };

// Declarative description of one of the nine estimators.
struct ModelSpec {
  Paradigm paradigm = Paradigm::bayesian;
  bool two_stage = false;               // ZI
  bool varying_coefficients = false;    // CVC (random slopes on all x)
  bool county_residual_variance = false;  // CRV
  bool spatial_intercept = false;       // SVI
  int nngp_neighbors = 15;              // used only when spatial_intercept

  static ModelSpec from_name(const std::string& name);
  std::string name() const;
  void validate() const;

  bool operator==(const ModelSpec& o) const {
    return paradigm == o.paradigm && two_stage == o.two_stage &&
           varying_coefficients == o.varying_coefficients &&
           county_residual_variance == o.county_residual_variance &&
           spatial_intercept == o.spatial_intercept;
  }
};

// All nine legal specs in Table-1 order.
std::vector<ModelSpec> all_model_specs();

struct PlotData {
  std::vector<PlotRecord> records;
  ColumnSchema schema;
  std::size_t size() const { return records.size(); }
};

struct GridData {
  std::vector<GridUnit> units;
  ColumnSchema schema;
  std::size_t size() const { return units.size(); }
};

// CSV ingestion. Required plot columns: id, x_km, y_km, county,
// biomass_mg_ha, plus the schema's predictor columns; the grid file is
// identical minus id and biomass. Errors carry the 1-based data row.
PlotData load_plots(const std::string& path, const ColumnSchema& schema,
                    CountyTable& counties, bool allow_new_counties = true);
GridData load_grid(const std::string& path, const ColumnSchema& schema,
                   CountyTable& counties, bool allow_new_counties = true);

void write_plots(const std::string& path, const PlotData& data, const CountyTable& counties);
void write_grid(const std::string& path, const GridData& data, const CountyTable& counties);

// Recompute per-county counts from scratch (after sampling / subsetting).
std::vector<int> county_counts(const std::vector<PlotRecord>& records, int n_counties);
std::vector<int> county_counts(const std::vector<GridUnit>& units, int n_counties);

struct ColumnStats {
  double mean = 0.0;
  double sd = 1.0;
  bool constant = false;
};

// Keyed by predictor column name; a name shared by both stages gets one entry.
using PredictorStats = std::map<std::string, ColumnStats>;

// Centers and scales predictor columns in place. With stats == nullptr the
// moments are fitted from the records (sample sd, n-1); otherwise the stored
// training moments are reused. Zero-variance columns error unless named in
// declared_constant, in which case they are centered only and flagged.
PredictorStats standardize_predictors(std::vector<PlotRecord>& records,
                                      const ColumnSchema& schema,
                                      const PredictorStats* stats = nullptr,
                                      const std::set<std::string>& declared_constant = {});
void standardize_grid(std::vector<GridUnit>& units, const ColumnSchema& schema,
                      const PredictorStats& stats);

// z(l) = 1 iff biomass(l) > 0. Warns when the continuous stage is empty.
std::vector<int> derive_presence(const std::vector<PlotRecord>& records);

// Dense design helpers (no intercept column; intercepts are explicit
// parameters throughout).
Eigen::MatrixXd design_x(const std::vector<PlotRecord>& records);
Eigen::MatrixXd design_v(const std::vector<PlotRecord>& records);
Eigen::VectorXd biomass_vector(const std::vector<PlotRecord>& records);

}  // namespace sae
