#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "dealflow/trace.hpp"

namespace dealflow {

struct DecayPoint {
  double t = 0.0;  // hours after inflection, integer-valued grid
  double r = 0.0;  // decay factor, >= 0
};

// Hour-by-hour damping of the multiplicative growth phase, normalized so that
// r(1) = 1, with an optional fitted exponential law r(t) ~ exp(a*t + b).
struct NoveltyDecay {
  std::vector<DecayPoint> r_table;  // covers t = 1..horizon
  std::optional<double> a;          // slope per hour
  std::optional<double> b;          // intercept
  double fit_r2 = 0.0;
  std::size_t traces_used = 0;
  std::size_t traces_excluded = 0;  // zero count at a required hour

  // r(t): table value where measured, exp(a*t + b) beyond the table (requires
  // the fit), and 0 for t < 1.
  double value(double t) const;
};

// Multiplier noise X_t of the growth recursion N <- N * (1 + r(t) * X_t),
// modeled as exp(N(mu_log, sigma_log^2)) so draws are strictly positive.
struct GrowthNoise {
  double mu_log = 0.0;
  double sigma_log = 0.0;  // >= 0; 0 degenerates to the point mass exp(mu_log)

  double mean() const { return std::exp(mu_log + 0.5 * sigma_log * sigma_log); }
};

struct PropagationModel {
  NoveltyDecay decay;
  GrowthNoise noise;
  double step_hours = 1.0;  // growth update cadence
};

// Estimates r(t) for t = 1..horizon from a cohort whose traces are aligned so
// that t = 0 is the inflection:
//   r(t) = (E[log N_t] - E[log N_{t-1}]) / (E[log N_1] - E[log N_0]),
// expectations being sample means over the cohort; r(1) = 1 by construction.
// Traces without full coverage of hours 0..horizon, or with a zero count at a
// required hour, are excluded (counted in traces_excluded). Throws
// InsufficientDataError when no usable traces remain and ValidationError when
// the cohort shows no first-hour growth (denominator <= 0).
NoveltyDecay estimate_decay(const Dataset& aligned_cohort, int horizon);

// Least-squares line fit of log r(t) against t, filling a, b and fit_r2.
// Points with r <= 0 are excluded, as is the t <= 1 row: r(1) is pinned to 1
// by the estimator's normalization and carries no information about the decay
// law. Throws ValidationError when fewer than 3 usable points remain.
NoveltyDecay fit_decay_exponential(const NoveltyDecay& d);

// Expected log growth multiplier over T hours after inflection:
// sum_{t=1}^{floor(T)} r(t) * E[X]. Deterministic; 0 for T < 1.
double expected_log_growth(const PropagationModel& m, double T);

}  // namespace dealflow
