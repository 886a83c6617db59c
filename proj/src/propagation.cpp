#include "dealflow/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "dealflow/errors.hpp"
#include "dealflow/stats.hpp"

namespace dealflow {

double NoveltyDecay::value(double t) const {
  if (t < 1.0) return 0.0;
  if (!r_table.empty() && t <= r_table.back().t + 1e-9) {
    // Table rows are on the integer hour grid; pick the row for this hour.
    for (const auto& p : r_table) {
      if (std::abs(p.t - t) < 0.5) return p.r;
    }
  }
  if (a && b) return std::exp(*a * t + *b);
  if (!r_table.empty()) return r_table.back().r;
  throw ValidationError("NoveltyDecay::value: empty table and no fitted law");
}

NoveltyDecay estimate_decay(const Dataset& aligned_cohort, int horizon) {
  if (horizon < 1) throw ValidationError("estimate_decay: horizon must be >= 1");

  // mean_log[h] accumulates log N_h over usable traces.
  std::vector<double> sum_log(static_cast<std::size_t>(horizon) + 1, 0.0);
  std::size_t used = 0, excluded = 0;
  for (const auto& tr : aligned_cohort.traces) {
    if (tr.samples.empty() || tr.samples.back().t + 1e-9 < static_cast<double>(horizon)) {
      ++excluded;  // does not cover the estimation window
      continue;
    }
    std::vector<double> logs(static_cast<std::size_t>(horizon) + 1);
    bool usable = true;
    for (int h = 0; h <= horizon; ++h) {
      const std::int64_t n = tr.count_at(static_cast<double>(h));
      if (n <= 0) {
        usable = false;  // log undefined; tipped deals always have N >= 1
        break;
      }
      logs[static_cast<std::size_t>(h)] = std::log(static_cast<double>(n));
    }
    if (!usable) {
      ++excluded;
      continue;
    }
    for (int h = 0; h <= horizon; ++h) {
      sum_log[static_cast<std::size_t>(h)] += logs[static_cast<std::size_t>(h)];
    }
    ++used;
  }
  if (used == 0) {
    throw InsufficientDataError("estimate_decay: no trace covers hours 0.." +
                                std::to_string(horizon) + " with positive counts");
  }

  const double denom = (sum_log[1] - sum_log[0]) / static_cast<double>(used);
  if (denom <= 0.0) {
    throw ValidationError("estimate_decay: cohort shows no first-hour growth");
  }

  NoveltyDecay d;
  d.traces_used = used;
  d.traces_excluded = excluded;
  d.r_table.reserve(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    const double increment =
        (sum_log[static_cast<std::size_t>(t)] - sum_log[static_cast<std::size_t>(t - 1)]) /
        static_cast<double>(used);
    d.r_table.push_back({static_cast<double>(t), increment / denom});
  }
  return d;
}

NoveltyDecay fit_decay_exponential(const NoveltyDecay& d) {
  std::vector<double> ts, log_rs;
  for (const auto& p : d.r_table) {
    if (p.t <= 1.0 + 1e-9) continue;  // normalization-pinned row, no information
    if (p.r <= 0.0) continue;
    ts.push_back(p.t);
    log_rs.push_back(std::log(p.r));
  }
  if (ts.size() < 3) {
    throw ValidationError("fit_decay_exponential: fewer than 3 usable decay points");
  }
  const LinearFit f = fit_line(ts, log_rs);
  NoveltyDecay out = d;
  out.a = f.slope;
  out.b = f.intercept;
  out.fit_r2 = f.r2;
  return out;
}

double expected_log_growth(const PropagationModel& m, double T) {
  if (T < 0.0) throw ValidationError("expected_log_growth: T must be >= 0");
  const double mean_x = m.noise.mean();
  double sum = 0.0;
  const int last = static_cast<int>(std::floor(T + 1e-9));
  for (int t = 1; t <= last; ++t) {
    sum += m.decay.value(static_cast<double>(t)) * mean_x;
  }
  return sum;
}

}  // namespace dealflow
