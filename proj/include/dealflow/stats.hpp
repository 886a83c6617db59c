#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dealflow {

// Ordinary least squares of y on x with intercept: y ~ slope * x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // coefficient of determination on the fitted points
  std::size_t n = 0;
};

// Throws ValidationError when fewer than 2 points or all x identical.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Natural log of the complete gamma function (thin wrapper, kept for symmetry
// with the incomplete variants below).
double log_gamma(double a);

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
// series for x < a + 1 and continued fraction otherwise.
double gamma_p(double a, double x);

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

// Survival function of Student's t with df degrees of freedom: P(T > t).
double student_t_sf(double t, double df);

// Two-sided p-value for a t statistic.
double student_t_two_sided_p(double t, double df);

// One-sample Kolmogorov-Smirnov statistic of `sample` against an analytic CDF
// evaluated at the sorted sample points: sup |ECDF - CDF|.
struct KsResult {
  double statistic = 0.0;
  double critical_value = 0.0;  // at the alpha used
  bool reject = false;          // statistic > critical_value
};

// cdf_values[i] must be the model CDF at the i-th order statistic of the
// sample (caller sorts and evaluates). alpha in (0, 1).
KsResult ks_test_sorted(std::span<const double> cdf_values, double alpha);

// Asymptotic KS critical value at significance alpha for sample size n,
// with the small-sample denominator correction sqrt(n) + 0.12 + 0.11/sqrt(n).
double ks_critical_value(std::size_t n, double alpha);

// Mean and standard error of the mean. Throws ValidationError on empty input.
struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
};
MeanSem mean_sem(std::span<const double> values);

}  // namespace dealflow
