#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

// Independent reference implementations used to validate the library. These
// deliberately avoid the library's own code paths: dense Cholesky instead of
// the sparse factorization, quadrature and Kahan summation instead of closed
// forms, classic special-function series for distribution tails.
namespace oracle {

// log N(w | 0, Sigma) via dense Cholesky
double mvn_logpdf(const Eigen::VectorXd& w, const Eigen::MatrixXd& Sigma);

// conditional N(mean, var) of one site given observed values:
// cov_obs = Cov(w_obs), cov_star_obs = Cov(w_star, w_obs), var_star = Var(w_star)
std::pair<double, double> conditional_normal(const Eigen::VectorXd& cov_star_obs,
                                             double var_star, const Eigen::MatrixXd& cov_obs,
                                             const Eigen::VectorXd& w_obs);

// regularized lower incomplete gamma P(a, x)
double gamma_p(double a, double x);
double normal_cdf(double x);
// X ~ Gamma(shape, rate)
double gamma_cdf(double x, double shape, double rate);
// X ~ InvGamma(shape, scale), density ∝ x^{-shape-1} e^{-scale/x}
double inv_gamma_cdf(double x, double shape, double scale);
double inv_gamma_quantile(double p, double shape, double scale);

struct KsResult {
  double d = 0.0;
  double p = 0.0;
};
// one-sample Kolmogorov-Smirnov test against a continuous CDF
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

// adaptive Simpson on [a, b]
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10);

// E[(m + sqrt(tau2) Z)^r], Z standard normal, by quadrature
double normal_power_moment(double m, double tau2, int r);

struct BalancedReml {
  double sigma2_b = 0.0;
  double tau2 = 0.0;
  double grand_mean = 0.0;
};
// closed-form REML for the balanced one-way random-intercept model
BalancedReml balanced_reml(const std::vector<std::vector<double>>& groups);

// compensated (Kahan) mean in long double
double kahan_mean(const std::vector<double>& v);

// direct h = (n + 1/3) p + 1/3 quantile on a sorted copy
double quantile_type8_ref(std::vector<double> v, double p);

// plain logistic regression by Newton iteration (intercept first column
// implicit); returns (alpha0, alpha)
Eigen::VectorXd logistic_mle(const std::vector<int>& z, const Eigen::MatrixXd& V);

}  // namespace oracle
