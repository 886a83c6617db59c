#include "dealflow/trace.hpp"

#include <algorithm>
#include <cmath>

#include "dealflow/errors.hpp"

namespace dealflow {

std::int64_t PurchaseTrace::count_at(double t) const {
  std::int64_t n = 0;
  for (const auto& s : samples) {
    if (s.t > t) break;
    n = s.n;
  }
  return n;
}

std::int64_t PurchaseTrace::final_count() const {
  return samples.empty() ? 0 : samples.back().n;
}

std::pair<Dataset, CleaningReport> clean_dataset(const Dataset& d,
                                                 std::int64_t drop_threshold) {
  if (drop_threshold < 1) throw ValidationError("clean_dataset: drop_threshold must be >= 1");
  Dataset out;
  out.provenance = d.provenance;
  CleaningReport report;
  report.threshold = drop_threshold;
  for (const auto& tr : d.traces) {
    bool drop = false;
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
      if (tr.samples[i - 1].n - tr.samples[i].n >= drop_threshold) {
        drop = true;
        break;
      }
    }
    if (drop) {
      ++report.dropped;
      report.dropped_ids.push_back(tr.deal_id);
      continue;
    }
    PurchaseTrace repaired = tr;
    std::int64_t running_max = 0;
    for (auto& s : repaired.samples) {
      running_max = std::max(running_max, s.n);
      s.n = running_max;
    }
    out.traces.push_back(std::move(repaired));
    ++report.kept;
  }
  return {std::move(out), std::move(report)};
}

PurchaseTrace resample_trace(const PurchaseTrace& tr, double dt) {
  if (dt <= 0.0) throw ValidationError("resample_trace: dt must be positive");
  if (tr.samples.empty()) throw ValidationError("resample_trace: empty trace");

  const double stop = std::min(tr.lifetime_hours, tr.samples.back().t);
  // ceil with a tolerance so that times already on the grid (subject to
  // floating-point representation of dt) do not gain an extra point.
  auto grid_points = static_cast<std::size_t>(std::ceil(stop / dt - 1e-9));

  PurchaseTrace out = tr;
  out.samples.clear();
  out.samples.reserve(grid_points + 1);
  std::size_t src = 0;
  std::int64_t n = 0;
  for (std::size_t k = 0; k <= grid_points; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (src < tr.samples.size() && tr.samples[src].t <= t + 1e-12) {
      n = tr.samples[src].n;
      ++src;
    }
    out.samples.push_back({t, n});
  }
  return out;
}

std::vector<double> interarrival_times(const PurchaseTrace& tr) {
  std::vector<double> arrivals;
  double prev_t = 0.0;
  std::int64_t prev_n = 0;
  for (const auto& s : tr.samples) {
    const std::int64_t gained = s.n - prev_n;
    if (gained < 0) {
      throw ValidationError("interarrival_times: trace not cleaned (count decreases)");
    }
    if (gained > 0) {
      const double width = s.t - prev_t;
      for (std::int64_t j = 1; j <= gained; ++j) {
        arrivals.push_back(prev_t + static_cast<double>(j) * width /
                                        static_cast<double>(gained + 1));
      }
    }
    prev_t = s.t;
    prev_n = s.n;
  }
  std::vector<double> gaps;
  gaps.reserve(arrivals.size());
  double last = 0.0;
  for (double a : arrivals) {
    gaps.push_back(a - last);
    last = a;
  }
  return gaps;
}

PurchaseTrace align_at_inflection(const PurchaseTrace& tr, double inflection_hour) {
  PurchaseTrace out = tr;
  out.samples.clear();
  for (const auto& s : tr.samples) {
    if (s.t + 1e-12 >= inflection_hour) {
      out.samples.push_back({s.t - inflection_hour, s.n});
    }
  }
  out.lifetime_hours = std::max(0.0, tr.lifetime_hours - inflection_hour);
  if (out.tipped_at) {
    out.tipped_at = *out.tipped_at - inflection_hour;
  }
  return out;
}

std::optional<double> first_time_reaching(const PurchaseTrace& tr, std::int64_t theta) {
  for (const auto& s : tr.samples) {
    if (s.n >= theta) return s.t;
  }
  return std::nullopt;
}

}  // namespace dealflow
