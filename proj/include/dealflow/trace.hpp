#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dealflow {

// One observation of a deal's cumulative purchase count.
struct TraceSample {
  double t = 0.0;      // hours since deal launch, >= 0
  std::int64_t n = 0;  // cumulative purchases, >= 0

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

// Regression covariates attached to a deal.
struct DealAttributes {
  std::int64_t tipping_point = 1;  // minimum purchases for the deal to activate
  bool featured = false;
  double duration_hours = 24.0;
  bool limited = false;
  double price = 0.0;
  double discount_pct = 0.0;
  std::string launch_day;
  std::string category;
  std::string city;

  friend bool operator==(const DealAttributes&, const DealAttributes&) = default;
};

// One deal's cumulative purchase counts over time plus metadata.
struct PurchaseTrace {
  std::string deal_id;
  int launch_hour_of_day = 0;     // 0..23
  double lifetime_hours = 24.0;   // L
  std::vector<TraceSample> samples;  // strictly increasing in t
  std::optional<DealAttributes> attributes;
  std::optional<double> tipped_at;  // first time cumulative count reached theta

  // Last observed count at or before time t (0 before the first sample).
  std::int64_t count_at(double t) const;

  // Final observed count (0 for an empty trace).
  std::int64_t final_count() const;
};

struct Dataset {
  std::vector<PurchaseTrace> traces;
  std::string provenance;
};

struct CleaningReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::vector<std::string> dropped_ids;
  std::int64_t threshold = 10;
};

// Removes traces containing any consecutive-sample decrease >= drop_threshold
// purchases; smaller decreases are repaired by clamping to the running max.
std::pair<Dataset, CleaningReport> clean_dataset(const Dataset& d,
                                                 std::int64_t drop_threshold = 10);

// Aligns a trace onto the uniform grid t = 0, dt, 2dt, ..., covering
// min(lifetime, last sample t); each grid value is the last observed count at
// or before the grid time. Idempotent on its own output.
PurchaseTrace resample_trace(const PurchaseTrace& tr, double dt);

// Reconstructs purchase arrival times from cumulative counts: m new purchases
// inside (t_prev, t_cur] are placed uniformly at t_prev + j*(t_cur-t_prev)/
// (m+1), j = 1..m. Returns consecutive differences, the first measured from
// launch (t = 0). A trace with zero purchases yields an empty sequence.
std::vector<double> interarrival_times(const PurchaseTrace& tr);

// Rebases sample times so that t = 0 is the given inflection hour, dropping
// samples before it. Used to build inflection-aligned cohorts.
PurchaseTrace align_at_inflection(const PurchaseTrace& tr, double inflection_hour);

// First sample time with n >= theta, if any.
std::optional<double> first_time_reaching(const PurchaseTrace& tr, std::int64_t theta);

}  // namespace dealflow
