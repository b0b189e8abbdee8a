#include "sae/freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sae/errors.hpp"

namespace sae {

namespace {

constexpr double kGolden = 0.6180339887498949;

double logistic(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Per-county sufficient statistics for the profiled REML criterion.
struct RemlWork {
  int n = 0, P = 0, J = 0;
  std::vector<Eigen::MatrixXd> G;  // D_j' D_j
  std::vector<Eigen::VectorXd> s;  // D_j' 1
  std::vector<Eigen::VectorXd> h;  // D_j' y_j
  std::vector<double> t;           // 1' y_j
  std::vector<double> yy;
  std::vector<int> nj;
};

struct RemlEval {
  double crit = std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
  double rss = 0.0;
  bool ok = false;
};

RemlEval reml_eval(const RemlWork& work, double lambda) {
  RemlEval ev;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(work.P, work.P);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(work.P);
  double yvy = 0.0;
  double logdet_v = 0.0;
  for (int j = 0; j < work.J; ++j) {
    if (work.nj[j] == 0) continue;
    double c = lambda / (1.0 + lambda * work.nj[j]);
    A.noalias() += work.G[j] - c * work.s[j] * work.s[j].transpose();
    r.noalias() += work.h[j] - (c * work.t[j]) * work.s[j];
    yvy += work.yy[j] - c * work.t[j] * work.t[j];
    logdet_v += std::log1p(lambda * work.nj[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return ev;
  ev.beta = llt.solve(r);
  ev.rss = std::max(yvy - ev.beta.dot(r), 1e-300);
  double logdet_a = 0.0;
  for (int k = 0; k < work.P; ++k) logdet_a += 2.0 * std::log(llt.matrixL()(k, k));
  ev.crit = (work.n - work.P) * std::log(ev.rss) + logdet_v + logdet_a;
  ev.ok = std::isfinite(ev.crit);
  return ev;
}

}  // namespace

LmmFit fit_lmm_reml(const Eigen::VectorXd& y_t, const Eigen::MatrixXd& X,
                    const std::vector<int>& county, int J,
                    std::optional<double> fixed_ratio) {
  const int n = static_cast<int>(y_t.size());
  const int p = static_cast<int>(X.cols());
  const int P = p + 1;
  if (X.rows() != n || static_cast<int>(county.size()) != n)
    throw DataError("reml: row count mismatch");
  if (n <= p + 2) throw DataError("reml: need n > p + 2");

  RemlWork work;
  work.n = n;
  work.P = P;
  work.J = J;
  work.G.assign(J, Eigen::MatrixXd::Zero(P, P));
  work.s.assign(J, Eigen::VectorXd::Zero(P));
  work.h.assign(J, Eigen::VectorXd::Zero(P));
  work.t.assign(J, 0.0);
  work.yy.assign(J, 0.0);
  work.nj.assign(J, 0);
  Eigen::VectorXd d(P);
  for (int i = 0; i < n; ++i) {
    int j = county[i];
    if (j < 0 || j >= J) throw DataError("reml: county index out of range");
    d[0] = 1.0;
    d.tail(p) = X.row(i);
    work.G[j].noalias() += d * d.transpose();
    work.s[j] += d;
    work.h[j] += y_t[i] * d;
    work.t[j] += y_t[i];
    work.yy[j] += y_t[i] * y_t[i];
    work.nj[j] += 1;
  }
  int observed = 0;
  for (int j = 0; j < J; ++j) observed += work.nj[j] > 0 ? 1 : 0;
  if (observed < 2 && !fixed_ratio) throw DataError("reml: need at least 2 observed counties");

  double lambda_hat;
  if (fixed_ratio) {
    lambda_hat = *fixed_ratio;
    if (lambda_hat < 0.0) throw ConfigError("reml: fixed ratio must be nonnegative");
  } else {
    std::vector<double> grid;
    grid.push_back(0.0);
    for (int k = 0; k <= 64; ++k) grid.push_back(std::pow(10.0, -8.0 + 0.25 * k));
    std::size_t best = 0;
    double best_crit = std::numeric_limits<double>::infinity();
    int finite = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      RemlEval ev = reml_eval(work, grid[k]);
      if (ev.ok) ++finite;
      if (ev.ok && ev.crit < best_crit) {
        best_crit = ev.crit;
        best = k;
      }
    }
    if (finite == 0)
      throw NumericError("reml: criterion non-finite across the ratio grid (n=" +
                         std::to_string(n) + ", J=" + std::to_string(J) + ")");
    if (best == 0) {
      lambda_hat = 0.0;
    } else {
      double a = best >= 2 ? std::log(grid[best - 1]) : std::log(grid[1]) - 4.0;
      double b = best + 1 < grid.size() ? std::log(grid[best + 1]) : std::log(grid[best]) + 4.0;
      double x1 = b - kGolden * (b - a);
      double x2 = a + kGolden * (b - a);
      double f1 = reml_eval(work, std::exp(x1)).crit;
      double f2 = reml_eval(work, std::exp(x2)).crit;
      for (int it = 0; it < 120 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - kGolden * (b - a);
          f1 = reml_eval(work, std::exp(x1)).crit;
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + kGolden * (b - a);
          f2 = reml_eval(work, std::exp(x2)).crit;
        }
      }
      lambda_hat = std::exp(0.5 * (a + b));
      // the zero boundary stays a valid candidate
      if (reml_eval(work, 0.0).crit <= reml_eval(work, lambda_hat).crit) lambda_hat = 0.0;
    }
  }

  RemlEval ev = reml_eval(work, lambda_hat);
  if (!ev.ok)
    throw NumericError("reml: criterion non-finite at the optimum (lambda=" +
                       std::to_string(lambda_hat) + ")");
  LmmFit fit;
  fit.lambda_hat = lambda_hat;
  fit.beta0_hat = ev.beta[0];
  fit.beta_hat = ev.beta.tail(p);
  fit.tau2_hat = ev.rss / (n - P);
  fit.sigma2_b0_hat = lambda_hat * fit.tau2_hat;
  fit.blups = Eigen::VectorXd::Zero(J);
  for (int j = 0; j < J; ++j) {
    if (work.nj[j] == 0 || lambda_hat == 0.0) continue;
    double S = work.t[j] - work.s[j].dot(ev.beta);
    fit.blups[j] = lambda_hat * S / (1.0 + lambda_hat * work.nj[j]);
  }
  return fit;
}

namespace {

struct GlmmWork {
  const std::vector<int>& z;
  const Eigen::MatrixXd& V;
  const std::vector<int>& county;
  int J, n, P;
  std::vector<std::vector<int>> rows;
  double ridge = 0.0;
};

struct GlmmInner {
  Eigen::VectorXd theta;  // (alpha0, alpha)
  Eigen::VectorXd u;      // county modes
  double penalized = -std::numeric_limits<double>::infinity();
  double laplace = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

double penalized_loglik(const GlmmWork& w, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& u, double sigma2) {
  double ll = 0.0;
  for (int i = 0; i < w.n; ++i) {
    double eta = theta[0] + w.V.row(i).dot(theta.tail(w.P - 1)) + u[w.county[i]];
    ll += w.z[i] * eta - log1p_exp(eta);
  }
  if (sigma2 > 0.0) ll -= 0.5 * u.squaredNorm() / sigma2;
  ll -= 0.5 * w.ridge * theta.squaredNorm();
  return ll;
}

GlmmInner glmm_inner(const GlmmWork& w, double sigma2, const Eigen::VectorXd* warm) {
  GlmmInner st;
  st.theta = warm ? *warm : Eigen::VectorXd::Zero(w.P);
  st.u = Eigen::VectorXd::Zero(w.J);
  const bool random = sigma2 > 0.0;
  st.penalized = penalized_loglik(w, st.theta, st.u, sigma2);
  Eigen::VectorXd eta(w.n), prob(w.n), wt(w.n), d(w.P);
  for (int iter = 0; iter < 300; ++iter) {
    // county modes, scalar Newton
    if (random) {
      for (int j = 0; j < w.J; ++j) {
        if (w.rows[j].empty()) {
          st.u[j] = 0.0;
          continue;
        }
        for (int inner = 0; inner < 8; ++inner) {
          double g = -st.u[j] / sigma2, h = 1.0 / sigma2;
          for (int i : w.rows[j]) {
            double e = st.theta[0] + w.V.row(i).dot(st.theta.tail(w.P - 1)) + st.u[j];
            double pi = logistic(e);
            g += w.z[i] - pi;
            h += pi * (1.0 - pi);
          }
          double step = g / h;
          st.u[j] += step;
          if (std::abs(step) < 1e-12) break;
        }
      }
    }
    // fixed effects, damped Newton
    for (int i = 0; i < w.n; ++i) {
      eta[i] = st.theta[0] + w.V.row(i).dot(st.theta.tail(w.P - 1)) + st.u[w.county[i]];
      prob[i] = logistic(eta[i]);
      wt[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(w.P, w.P);
    H.diagonal().array() += w.ridge + 1e-12;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.P);
    g -= w.ridge * st.theta;
    for (int i = 0; i < w.n; ++i) {
      d[0] = 1.0;
      d.tail(w.P - 1) = w.V.row(i);
      H.noalias() += wt[i] * d * d.transpose();
      g.noalias() += (w.z[i] - prob[i]) * d;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return st;
    Eigen::VectorXd step = llt.solve(g);
    double before = penalized_loglik(w, st.theta, st.u, sigma2);
    double scale = 1.0;
    Eigen::VectorXd cand;
    double after = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      cand = st.theta + scale * step;
      after = penalized_loglik(w, cand, st.u, sigma2);
      if (std::isfinite(after) && after >= before - 1e-13) break;
      scale *= 0.5;
    }
    if (!std::isfinite(after)) return st;
    st.theta = cand;
    double gain = after - st.penalized;
    st.penalized = after;
    if (iter > 2 && std::abs(gain) < 1e-11) break;
  }
  // Laplace correction
  double corr = 0.0;
  if (random) {
    for (int j = 0; j < w.J; ++j) {
      double hj = 1.0 / sigma2;
      for (int i : w.rows[j]) {
        double e = st.theta[0] + w.V.row(i).dot(st.theta.tail(w.P - 1)) + st.u[j];
        double pi = logistic(e);
        hj += pi * (1.0 - pi);
      }
      corr += std::log(sigma2 * hj);
    }
  }
  st.laplace = st.penalized - 0.5 * corr;
  st.ok = std::isfinite(st.laplace);
  return st;
}

}  // namespace

GlmmFit fit_bernoulli_glmm_laplace(const std::vector<int>& z, const Eigen::MatrixXd& V,
                                   const std::vector<int>& county, int J) {
  const int n = static_cast<int>(z.size());
  const int q = static_cast<int>(V.cols());
  if (n == 0) throw DataError("glmm: empty dataset");
  if (V.rows() != n || static_cast<int>(county.size()) != n)
    throw DataError("glmm: row count mismatch");
  int ones = 0;
  for (int zi : z) {
    if (zi != 0 && zi != 1) throw DataError("glmm: z must be binary");
    ones += zi;
  }

  GlmmWork work{z, V, county, J, n, q + 1, {}, 0.0};
  work.rows.resize(J);
  for (int i = 0; i < n; ++i) {
    if (county[i] < 0 || county[i] >= J) throw DataError("glmm: county index out of range");
    work.rows[county[i]].push_back(i);
  }
  if (ones == 0 || ones == n) {
    warn("glmm: single-class response, complete separation, applying ridge fallback");
    work.ridge = 1e-4;
  }

  auto solve_profile = [&](GlmmWork& w, bool& diverged) {
    // boundary sigma2 = 0 plus a log grid, then golden-section refinement
    std::vector<double> sig{0.0};
    for (int k = 0; k <= 24; ++k) sig.push_back(std::pow(10.0, -6.0 + 0.3125 * k));
    std::vector<GlmmInner> evals(sig.size());
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    diverged = false;
    Eigen::VectorXd warm;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      evals[k] = glmm_inner(w, sig[k], warm.size() ? &warm : nullptr);
      if (!evals[k].ok) {
        diverged = true;
        continue;
      }
      warm = evals[k].theta;
      if (evals[k].laplace > best_val) {
        best_val = evals[k].laplace;
        best = k;
      }
    }
    if (!std::isfinite(best_val)) {
      diverged = true;
      return std::pair<double, GlmmInner>(0.0, GlmmInner{});
    }
    if (best == 0) return std::pair<double, GlmmInner>(0.0, evals[0]);
    double a = best > 1 ? std::log(sig[best - 1]) : std::log(sig[1]) - 3.0;
    double b = best + 1 < sig.size() ? std::log(sig[best + 1]) : std::log(sig[best]) + 3.0;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = glmm_inner(w, std::exp(x1), &warm).laplace;
    double f2 = glmm_inner(w, std::exp(x2), &warm).laplace;
    for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
      if (f1 > f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGolden * (b - a);
        f1 = glmm_inner(w, std::exp(x1), &warm).laplace;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (b - a);
        f2 = glmm_inner(w, std::exp(x2), &warm).laplace;
      }
    }
    double s2 = std::exp(0.5 * (a + b));
    GlmmInner fin = glmm_inner(w, s2, &warm);
    if (evals[0].ok && evals[0].laplace >= fin.laplace)
      return std::pair<double, GlmmInner>(0.0, evals[0]);
    return std::pair<double, GlmmInner>(s2, fin);
  };

  bool diverged = false;
  auto [sigma2, inner] = solve_profile(work, diverged);
  bool separated = diverged || !inner.ok ||
                   (inner.theta.size() && inner.theta.cwiseAbs().maxCoeff() > 30.0);
  if (separated && work.ridge == 0.0) {
    warn("glmm: complete separation suspected, applying ridge fallback");
    work.ridge = 1e-4;
    std::tie(sigma2, inner) = solve_profile(work, diverged);
  }
  if (!inner.ok)
    throw NumericError("glmm: inner optimization failed to converge");

  GlmmFit fit;
  fit.alpha0_hat = inner.theta[0];
  fit.alpha_hat = inner.theta.tail(q);
  fit.sigma2_a0_hat = sigma2;
  fit.county_modes = inner.u;
  fit.ridge_applied = work.ridge > 0.0;

  // standard errors from the Schur complement of the joint Hessian
  Eigen::MatrixXd Htt = Eigen::MatrixXd::Zero(q + 1, q + 1);
  Htt.diagonal().array() += work.ridge;
  Eigen::MatrixXd Htu = Eigen::MatrixXd::Zero(q + 1, J);
  Eigen::VectorXd Huu = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd d(q + 1);
  for (int j = 0; j < J; ++j) {
    Huu[j] = sigma2 > 0.0 ? 1.0 / sigma2 : 0.0;
    for (int i : work.rows[j]) {
      double e = inner.theta[0] + V.row(i).dot(inner.theta.tail(q)) + inner.u[j];
      double pi = logistic(e);
      double wi = pi * (1.0 - pi);
      d[0] = 1.0;
      d.tail(q) = V.row(i);
      Htt.noalias() += wi * d * d.transpose();
      if (sigma2 > 0.0) Htu.col(j) += wi * d;
      Huu[j] += wi;
    }
  }
  Eigen::MatrixXd S = Htt;
  if (sigma2 > 0.0)
    for (int j = 0; j < J; ++j) S.noalias() -= (1.0 / Huu[j]) * Htu.col(j) * Htu.col(j).transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  fit.std_errors = Eigen::VectorXd::Constant(q + 1, std::numeric_limits<double>::quiet_NaN());
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(q + 1, q + 1));
    fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

GridMatrices grid_matrices(const GridData& grid, int J) {
  GridMatrices g;
  g.J = J;
  const int n = static_cast<int>(grid.units.size());
  const int p = n ? static_cast<int>(grid.units[0].predictors_x.size()) : 0;
  const int q = n ? static_cast<int>(grid.units[0].predictors_v.size()) : 0;
  g.X.resize(n, p);
  g.V.resize(n, q);
  g.county.reserve(n);
  g.county_units.resize(J);
  for (int i = 0; i < n; ++i) {
    const auto& u = grid.units[static_cast<std::size_t>(i)];
    if (u.county_id < 0 || u.county_id >= J)
      throw DataError("grid: unknown county index " + std::to_string(u.county_id) +
                      " at unit " + std::to_string(i));
    for (int k = 0; k < p; ++k) g.X(i, k) = u.predictors_x[static_cast<std::size_t>(k)];
    for (int k = 0; k < q; ++k) g.V(i, k) = u.predictors_v[static_cast<std::size_t>(k)];
    g.county.push_back(u.county_id);
    g.county_units[u.county_id].push_back(i);
  }
  return g;
}

std::vector<UnitPrediction> predict_units(const LmmFit& lmm, const GlmmFit& glmm,
                                          const GridMatrices& grid, const Transform& transform) {
  const int n = static_cast<int>(grid.county.size());
  if (static_cast<int>(lmm.blups.size()) != grid.J ||
      static_cast<int>(glmm.county_modes.size()) != grid.J)
    throw DataError("predict_units: county table size mismatch");
  std::vector<UnitPrediction> out(static_cast<std::size_t>(n));
  Eigen::VectorXd ly = grid.X * lmm.beta_hat;
  Eigen::VectorXd lp = grid.V * glmm.alpha_hat;
  for (int i = 0; i < n; ++i) {
    int j = grid.county[i];
    UnitPrediction& u = out[static_cast<std::size_t>(i)];
    u.y_t_hat = lmm.beta0_hat + lmm.blups[j] + ly[i];
    u.p_hat = logistic(glmm.alpha0_hat + glmm.county_modes[j] + lp[i]);
    u.product = transform.bias_corrected_inverse(u.y_t_hat, lmm.tau2_hat) * u.p_hat;
  }
  return out;
}

Eigen::VectorXd estimate_county_means(const std::vector<UnitPrediction>& units,
                                      const GridMatrices& grid) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(grid.J);
  for (int j = 0; j < grid.J; ++j) {
    const auto& list = grid.county_units[j];
    if (list.empty())
      throw DataError("estimate_county_means: county " + std::to_string(j) +
                      " has no grid units");
    double acc = 0.0;
    for (int i : list) acc += units[static_cast<std::size_t>(i)].product;
    mu[j] = acc / static_cast<double>(list.size());
  }
  return mu;
}

BootstrapReplicate bootstrap_replicate(const LmmFit& lmm, const GlmmFit& glmm,
                                       const SampleMatrices& sample, const GridMatrices& grid,
                                       const Transform& transform, std::uint64_t seed) {
  Rng rng(seed);
  const int J = grid.J;
  BootstrapReplicate rep;
  Eigen::VectorXd bstar(J), astar(J);
  double sb = std::sqrt(std::max(lmm.sigma2_b0_hat, 0.0));
  double sa = std::sqrt(std::max(glmm.sigma2_a0_hat, 0.0));
  for (int j = 0; j < J; ++j) {
    bstar[j] = sb * rng.normal();
    astar[j] = sa * rng.normal();
  }

  // bootstrap truth: realized two-stage draws over the grid population
  Eigen::VectorXd gly = grid.X * lmm.beta_hat;
  Eigen::VectorXd glp = grid.V * glmm.alpha_hat;
  double tau = std::sqrt(std::max(lmm.tau2_hat, 0.0));
  rep.truth = Eigen::VectorXd::Zero(J);
  for (int j = 0; j < J; ++j) {
    const auto& list = grid.county_units[j];
    double acc = 0.0;
    for (int i : list) {
      double pr = logistic(glmm.alpha0_hat + astar[j] + glp[i]);
      if (!rng.bernoulli(pr)) continue;
      double t = lmm.beta0_hat + bstar[j] + gly[i] + tau * rng.normal();
      acc += transform.naive_inverse(t);
    }
    rep.truth[j] = acc / static_cast<double>(list.size());
  }

  // resimulated sample at the observed design points
  const int n = static_cast<int>(sample.county.size());
  Eigen::VectorXd sly = sample.X * lmm.beta_hat;
  Eigen::VectorXd slp = sample.V * glmm.alpha_hat;
  std::vector<int> zstar(static_cast<std::size_t>(n));
  Eigen::VectorXd ystar_t(n);
  for (int i = 0; i < n; ++i) {
    int j = sample.county[i];
    double pr = logistic(glmm.alpha0_hat + astar[j] + slp[i]);
    zstar[static_cast<std::size_t>(i)] = rng.bernoulli(pr) ? 1 : 0;
    double m = lmm.beta0_hat + bstar[j] + sly[i];
    // transformed response folds at zero through biomass = (y_t)^r
    ystar_t[i] = std::abs(m + tau * rng.normal());
  }

  std::vector<int> pos;
  for (int i = 0; i < n; ++i)
    if (zstar[static_cast<std::size_t>(i)] == 1) pos.push_back(i);
  if (static_cast<int>(pos.size()) <= sample.X.cols() + 2) return rep;
  {
    std::vector<int> seen(J, 0);
    int counties_with_pos = 0;
    for (int i : pos)
      if (!seen[sample.county[i]]++) ++counties_with_pos;
    if (counties_with_pos < 2) return rep;
  }

  Eigen::MatrixXd Xp(static_cast<Eigen::Index>(pos.size()), sample.X.cols());
  Eigen::VectorXd yp(static_cast<Eigen::Index>(pos.size()));
  std::vector<int> cp;
  cp.reserve(pos.size());
  for (std::size_t t = 0; t < pos.size(); ++t) {
    Xp.row(static_cast<Eigen::Index>(t)) = sample.X.row(pos[t]);
    yp[static_cast<Eigen::Index>(t)] = ystar_t[pos[t]];
    cp.push_back(sample.county[pos[t]]);
  }
  try {
    LmmFit lmm_b = fit_lmm_reml(yp, Xp, cp, J);
    GlmmFit glmm_b = fit_bernoulli_glmm_laplace(zstar, sample.V, sample.county, J);
    auto units = predict_units(lmm_b, glmm_b, grid, transform);
    rep.estimate = estimate_county_means(units, grid);
    rep.ok = true;
  } catch (const std::exception&) {
    rep.ok = false;
  }
  return rep;
}

BootstrapMse bootstrap_mse(const LmmFit& lmm, const GlmmFit& glmm,
                           const SampleMatrices& sample, const GridMatrices& grid,
                           const Transform& transform, int B, std::uint64_t seed) {
  if (B < 2) throw ConfigError("bootstrap: B must be at least 2");
  std::vector<BootstrapReplicate> reps(static_cast<std::size_t>(B));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b)
    reps[static_cast<std::size_t>(b)] =
        bootstrap_replicate(lmm, glmm, sample, grid, transform, derive_seed(seed, "boot", b));
  BootstrapMse out;
  out.B = B;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.J);
  int ok = 0;
  for (const auto& rep : reps) {
    if (!rep.ok) {
      out.failures += 1;
      continue;
    }
    ok += 1;
    acc += (rep.estimate - rep.truth).array().square().matrix();
  }
  if (out.failures * 10 > B)
    throw NumericError("bootstrap: " + std::to_string(out.failures) + " of " +
                       std::to_string(B) + " replicates failed");
  out.rmse_hat = (acc / std::max(ok, 1)).cwiseSqrt();
  return out;
}

}  // namespace sae
