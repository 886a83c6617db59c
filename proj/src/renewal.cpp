#include "dealflow/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dealflow/errors.hpp"
#include "dealflow/stats.hpp"

namespace dealflow {

RenewalModel fit_exponential(std::span<const double> interarrivals) {
  if (interarrivals.size() < 2) {
    throw ValidationError("fit_exponential: need at least 2 interarrivals");
  }
  double sum = 0.0;
  for (double v : interarrivals) {
    if (v <= 0.0) throw ValidationError("fit_exponential: interarrivals must be positive");
    sum += v;
  }
  RenewalModel m;
  m.n_obs = interarrivals.size();
  m.rate = static_cast<double>(m.n_obs) / sum;

  std::vector<double> sorted(interarrivals.begin(), interarrivals.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Empirical CDF at Hazen plotting positions vs fitted exponential CDF.
  double mean_y = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    mean_y += (static_cast<double>(i) + 0.5) / n;
  }
  mean_y /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double y = (static_cast<double>(i) + 0.5) / n;
    const double fitted = 1.0 - std::exp(-m.rate * sorted[i]);
    ss_res += (y - fitted) * (y - fitted);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  m.fit_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return m;
}

double erlang_cdf(std::int64_t n, double rate, double t) {
  if (n < 1) throw ValidationError("erlang_cdf: n must be >= 1");
  if (rate <= 0.0) throw ValidationError("erlang_cdf: rate must be positive");
  if (t < 0.0) throw ValidationError("erlang_cdf: t must be non-negative");
  // Sum of n iid exponentials <= t iff a Poisson(rate*t) count is >= n, which
  // is the regularized incomplete gamma P(n, rate*t); gamma_p evaluates it
  // with log-space prefactors, so large n*rate*t stays finite.
  return gamma_p(static_cast<double>(n), rate * t);
}

double failure_probability(const RenewalModel& m, std::int64_t theta, double L,
                           bool include_zero) {
  if (theta < 1) throw ValidationError("failure_probability: theta must be >= 1");
  if (L <= 0.0) throw ValidationError("failure_probability: L must be positive");
  const double f_theta = erlang_cdf(theta, m.rate, L);
  if (include_zero) return 1.0 - f_theta;
  return erlang_cdf(1, m.rate, L) - f_theta;
}

double conditional_failure_probability(const RenewalModel& m, std::int64_t theta,
                                       std::int64_t n1, double t1, double L,
                                       bool include_zero) {
  if (theta < 1) throw ValidationError("conditional_failure_probability: theta must be >= 1");
  if (n1 < 0) throw ValidationError("conditional_failure_probability: n1 must be >= 0");
  if (t1 < 0.0) throw ValidationError("conditional_failure_probability: t1 must be >= 0");
  if (t1 > L) throw ValidationError("conditional_failure_probability: t1 exceeds L");
  if (n1 >= theta) return 0.0;
  const double horizon = L - t1;
  const std::int64_t remaining = theta - n1;
  if (horizon == 0.0) return include_zero ? 1.0 : 0.0;
  const double f_rem = erlang_cdf(remaining, m.rate, horizon);
  if (include_zero) return 1.0 - f_rem;
  return erlang_cdf(1, m.rate, horizon) - f_rem;
}

double tipping_time_density(std::int64_t theta, double rate, double t) {
  if (theta < 1) throw ValidationError("tipping_time_density: theta must be >= 1");
  if (rate <= 0.0) throw ValidationError("tipping_time_density: rate must be positive");
  if (t < 0.0) throw ValidationError("tipping_time_density: t must be non-negative");
  if (t == 0.0) return theta == 1 ? rate : 0.0;
  const double k = static_cast<double>(theta);
  return std::exp(k * std::log(rate) + (k - 1.0) * std::log(t) - rate * t -
                  log_gamma(k));
}

double tipping_time_cdf(std::int64_t theta, double rate, double t) {
  return erlang_cdf(theta, rate, t);
}

}  // namespace dealflow
