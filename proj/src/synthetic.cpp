#include "sae/synthetic.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "sae/errors.hpp"
#include "sae/rng.hpp"

namespace sae {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Bump {
  double cx, cy, amp, rho;
};

double surface(const std::vector<Bump>& bumps, double x, double y) {
  double w = 0.0;
  for (const auto& b : bumps) {
    double dx = x - b.cx, dy = y - b.cy;
    w += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.rho * b.rho));
  }
  return w;
}

struct SceneTruth {
  std::vector<Bump> bumps;
  std::vector<double> u_county, v_county, tau_county;
  double a0 = 0.3, a_tcc = 1.6, a_tri = -0.4;
  double b0 = 5.5, b_tcc = 1.2, b_elev = -0.5;
};

SceneTruth make_scene_truth(int J, double domain, std::uint64_t seed) {
  SceneTruth t;
  Rng rng(derive_seed(seed, "truth", 0));
  for (int g = 0; g < 8; ++g) {
    Bump b;
    b.cx = rng.uniform(0.0, domain);
    b.cy = rng.uniform(0.0, domain);
    b.amp = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.8, 1.6);
    b.rho = rng.uniform(8.0, 18.0);
    t.bumps.push_back(b);
  }
  for (int j = 0; j < J; ++j) {
    t.u_county.push_back(0.6 * rng.normal());
    t.v_county.push_back(0.7 * rng.normal());
    t.tau_county.push_back(0.5 + 0.8 * (j % 5) / 4.0);
  }
  return t;
}

struct Fields {
  double tcc, elev, tri;
};

Fields fields_at(double x, double y, Rng& rng) {
  Fields f;
  double n1 = rng.normal(), n2 = rng.normal(), n3 = rng.normal();
  f.tcc = 45.0 + 28.0 * std::sin(x / 13.7) + 22.0 * std::cos(y / 9.3 + 0.8) +
          14.0 * std::sin((x + y) / 21.1) + 6.0 * n1;
  f.tcc = std::clamp(f.tcc, 0.0, 100.0);
  f.elev = 300.0 + 120.0 * std::cos(x / 31.0) + 90.0 * std::sin(y / 23.0) + 15.0 * n2;
  f.tri = std::abs(35.0 * std::sin(x / 7.3) * std::cos(y / 11.9)) + 2.0 * std::abs(n3);
  return f;
}

double donor_biomass(const SceneTruth& t, const Fields& f, double x, double y, int j,
                     Rng& rng) {
  double s_tcc = (f.tcc - 45.0) / 25.0;
  double s_tri = (f.tri - 10.0) / 10.0;
  double s_elev = (f.elev - 300.0) / 100.0;
  double eta = t.a0 + t.a_tcc * s_tcc + t.a_tri * s_tri + t.u_county[static_cast<std::size_t>(j)];
  if (!rng.bernoulli(logistic(eta))) return 0.0;
  double y_t = t.b0 + t.b_tcc * s_tcc + t.b_elev * s_elev + surface(t.bumps, x, y) +
               t.v_county[static_cast<std::size_t>(j)] +
               t.tau_county[static_cast<std::size_t>(j)] * rng.normal();
  return y_t * y_t;
}

int tile_of(double x, double y, int cx, int cy, double domain) {
  int col = std::min(cx - 1, static_cast<int>(x / (domain / cx)));
  int row = std::min(cy - 1, static_cast<int>(y / (domain / cy)));
  return row * cx + col;
}

std::string county_name(int j) {
  std::string num = std::to_string(j + 1);
  return "C" + std::string(num.size() < 2 ? 2 - num.size() : 0, '0') + num;
}

}  // namespace

std::vector<std::string> tnt_strata(const std::vector<double>& tcc, double threshold) {
  std::vector<std::string> out;
  out.reserve(tcc.size());
  for (double v : tcc) out.push_back(v >= threshold ? "treed" : "nontreed");
  return out;
}

SyntheticScene make_synthetic_scene(const SyntheticConfig& cfg) {
  if (cfg.grid_side < 2 || cfg.n_donors < 10 || cfg.counties_x < 1 || cfg.counties_y < 1)
    throw ConfigError("synthetic: degenerate scene configuration");
  SyntheticScene scene;
  scene.J = cfg.counties_x * cfg.counties_y;
  for (int j = 0; j < scene.J; ++j) scene.counties.intern(county_name(j));
  SceneTruth truth = make_scene_truth(scene.J, cfg.domain_km, cfg.seed);

  ColumnSchema schema;
  schema.predictors_x = {"tcc", "elev"};
  schema.predictors_v = {"tcc", "tri"};
  scene.pixels.schema = schema;
  scene.donors.schema = schema;

  const double step = cfg.domain_km / cfg.grid_side;
  std::vector<double> pixel_tcc;
  scene.pixels.units.reserve(static_cast<std::size_t>(cfg.grid_side) * cfg.grid_side);
  for (int iy = 0; iy < cfg.grid_side; ++iy) {
    for (int ix = 0; ix < cfg.grid_side; ++ix) {
      std::size_t idx = scene.pixels.units.size();
      Rng rng(derive_seed(cfg.seed, "pixel", idx));
      GridUnit u;
      u.x = (ix + 0.5) * step;
      u.y = (iy + 0.5) * step;
      u.county_id = tile_of(u.x, u.y, cfg.counties_x, cfg.counties_y, cfg.domain_km);
      Fields f = fields_at(u.x, u.y, rng);
      u.predictors_x = {f.tcc, f.elev};
      u.predictors_v = {f.tcc, f.tri};
      pixel_tcc.push_back(f.tcc);
      scene.pixels.units.push_back(std::move(u));
    }
  }

  std::vector<double> donor_tcc;
  for (int i = 0; i < cfg.n_donors; ++i) {
    Rng rng(derive_seed(cfg.seed, "donor", static_cast<std::size_t>(i)));
    PlotRecord r;
    r.id = "d" + std::to_string(i);
    r.x = rng.uniform(0.0, cfg.domain_km);
    r.y = rng.uniform(0.0, cfg.domain_km);
    r.county_id = tile_of(r.x, r.y, cfg.counties_x, cfg.counties_y, cfg.domain_km);
    Fields f = fields_at(r.x, r.y, rng);
    r.predictors_x = {f.tcc, f.elev};
    r.predictors_v = {f.tcc, f.tri};
    r.biomass = donor_biomass(truth, f, r.x, r.y, r.county_id, rng);
    donor_tcc.push_back(f.tcc);
    scene.donors.records.push_back(std::move(r));
  }

  scene.pixel_strata = tnt_strata(pixel_tcc);
  scene.donor_strata = tnt_strata(donor_tcc);
  scene.counties.n_obs = county_counts(scene.donors.records, scene.J);
  scene.counties.n_grid = county_counts(scene.pixels.units, scene.J);
  return scene;
}

PlotData simulate_model_dataset(const ModelTruth& truth, int n, int J, CountyTable& counties,
                                std::uint64_t seed) {
  if (n < 10 || J < 1) throw ConfigError("synthetic: degenerate model dataset");
  const int p = static_cast<int>(truth.beta.size());
  const int q = static_cast<int>(truth.alpha.size());
  std::vector<double> tau = truth.tau1;
  if (tau.empty()) tau = {0.8};

  for (int j = 0; j < J; ++j) counties.intern(county_name(j));

  Rng rng(seed);
  std::vector<double> atilde0(static_cast<std::size_t>(J)), btilde0(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    atilde0[static_cast<std::size_t>(j)] = std::sqrt(truth.sigma2_a0) * rng.normal();
    btilde0[static_cast<std::size_t>(j)] = std::sqrt(truth.sigma2_b0) * rng.normal();
  }

  PlotData data;
  for (int k = 0; k < p; ++k) data.schema.predictors_x.push_back("x" + std::to_string(k + 1));
  for (int k = 0; k < q; ++k) data.schema.predictors_v.push_back("v" + std::to_string(k + 1));

  std::vector<int> pos_rows;
  for (int i = 0; i < n; ++i) {
    PlotRecord r;
    r.id = "u" + std::to_string(i);
    r.x = rng.uniform(0.0, truth.domain_km);
    r.y = rng.uniform(0.0, truth.domain_km);
    r.county_id = static_cast<int>(rng.uniform_int(J));
    for (int k = 0; k < p; ++k) r.predictors_x.push_back(rng.normal());
    for (int k = 0; k < q; ++k) r.predictors_v.push_back(rng.normal());
    double eta = truth.alpha0 + atilde0[static_cast<std::size_t>(r.county_id)];
    for (int k = 0; k < q; ++k) eta += truth.alpha[static_cast<std::size_t>(k)] * r.predictors_v[k];
    r.biomass = rng.bernoulli(logistic(eta)) ? -1.0 : 0.0;
    if (r.biomass < 0.0) pos_rows.push_back(i);
    data.records.push_back(std::move(r));
  }

  // dense GP draw over the positive sites
  const int np = static_cast<int>(pos_rows.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(np);
  if (np > 0) {
    Eigen::MatrixXd R(np, np);
    for (int a = 0; a < np; ++a) {
      const auto& ra = data.records[static_cast<std::size_t>(pos_rows[a])];
      for (int b = 0; b <= a; ++b) {
        const auto& rb = data.records[static_cast<std::size_t>(pos_rows[b])];
        double d = std::hypot(ra.x - rb.x, ra.y - rb.y);
        R(a, b) = R(b, a) = truth.sigma2_w * std::exp(-truth.phi * d);
      }
      R(a, a) += 1e-10;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success)
      throw NumericError("synthetic: GP covariance not positive definite");
    Eigen::VectorXd zv(np);
    for (int a = 0; a < np; ++a) zv[a] = rng.normal();
    w = llt.matrixL() * zv;
  }

  for (int t = 0; t < np; ++t) {
    PlotRecord& r = data.records[static_cast<std::size_t>(pos_rows[t])];
    double mean = truth.beta0 + btilde0[static_cast<std::size_t>(r.county_id)] + w[t];
    for (int k = 0; k < p; ++k) mean += truth.beta[static_cast<std::size_t>(k)] * r.predictors_x[k];
    double sd = tau[static_cast<std::size_t>(r.county_id) % tau.size()];
    double y_t = mean + sd * rng.normal();
    double bio = y_t;
    for (int rr = 1; rr < truth.root; ++rr) bio *= y_t;
    r.biomass = std::abs(bio);
  }

  counties.n_obs = county_counts(data.records, J);
  return data;
}

}  // namespace sae
