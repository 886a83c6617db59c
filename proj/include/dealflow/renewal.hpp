#pragma once

#include <cstdint>
#include <span>

namespace dealflow {

// Exponential interarrival model of the pre-inflection purchase process.
struct RenewalModel {
  double rate = 1.0;     // purchases per hour (lambda), > 0
  double fit_r2 = 0.0;   // agreement between empirical and fitted CDF
  std::size_t n_obs = 0; // interarrivals used
};

// Maximum-likelihood exponential fit: rate = 1 / mean. fit_r2 is the
// coefficient of determination between the empirical CDF (Hazen plotting
// positions (i + 0.5) / n on the sorted sample) and the fitted CDF.
// Throws ValidationError on fewer than 2 samples or any non-positive value.
RenewalModel fit_exponential(std::span<const double> interarrivals);

// P(S_n <= t) where S_n is a sum of n iid Exponential(rate) variables:
// 1 - sum_{k=0}^{n-1} e^{-rt} (rt)^k / k!, accumulated in log space so large
// n*rate*t cannot overflow.
double erlang_cdf(std::int64_t n, double rate, double t);

// Probability that a deal never reaches theta purchases within L hours.
// include_zero=false reproduces the telescoped sum F_1(L) - F_theta(L), which
// omits the zero-purchase outcome; include_zero=true counts it:
// 1 - F_theta(L).
double failure_probability(const RenewalModel& m, std::int64_t theta, double L,
                           bool include_zero = true);

// Same, conditioned on having observed n1 purchases by time t1: the remaining
// horizon is L - t1 and the remaining count theta - n1. Returns 0 when
// n1 >= theta. Throws ValidationError when t1 > L.
double conditional_failure_probability(const RenewalModel& m, std::int64_t theta,
                                       std::int64_t n1, double t1, double L,
                                       bool include_zero = true);

// Density of the time of the theta-th purchase: Gamma(shape theta, rate).
double tipping_time_density(std::int64_t theta, double rate, double t);

// CDF companion of the density above (used for goodness-of-fit tests).
double tipping_time_cdf(std::int64_t theta, double rate, double t);

}  // namespace dealflow
