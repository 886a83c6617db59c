#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dealflow/propagation.hpp"
#include "dealflow/trace.hpp"

namespace dealflow {

enum class InflectionRule {
  kTipping,  // growth phase starts at the theta-th purchase
  kFixed,    // growth phase starts at a fixed hour
};

struct SimConfig {
  double rate = 2.1;             // base purchase rate per hour
  std::int64_t theta = 22;       // tipping point
  double lifetime_hours = 24.0;  // L
  double sample_step_hours = 1.0 / 3.0;  // output grid spacing
  PropagationModel propagation;
  InflectionRule inflection_rule = InflectionRule::kTipping;
  double fixed_inflection_hour = 4.0;  // used by kFixed
  std::optional<std::array<double, 24>> seasonality;  // mean-1 hourly profile
  int launch_hour = 0;  // 0..23, anchors the seasonality profile
  std::optional<std::int64_t> max_sales;
  std::uint64_t seed = 0;
  std::string id_prefix = "deal";

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct SimResult {
  Dataset dataset;
  // (deal_id, inflection hour) for deals that entered the growth phase.
  std::vector<std::pair<std::string, double>> per_deal_inflection;
  SimConfig config;
};

// Simulates one deal: Poisson arrivals at rate*seasonality(hour of day) until
// the inflection (or the whole lifetime for failed deals), then hourly
// multiplicative updates N <- N * (1 + r(t) * X_t) with X_t from the growth
// noise, fractional counts carried internally and floored in the output. The
// trace is sampled on the grid t = 0, step, 2*step, ..., <= L; a sample at an
// update's exact time includes it. tipped_at records the exact inflection
// arrival time under the tipping rule. Deterministic given (seed, deal_index):
// the per-deal random stream depends on those two values only.
PurchaseTrace simulate_deal(const SimConfig& cfg, std::uint64_t deal_index);

// n_deals independent traces with deal_index 0..n-1, optionally generated on
// several threads; the output is identical regardless of thread count.
SimResult simulate_cohort(const SimConfig& cfg, std::size_t n_deals,
                          unsigned n_threads = 1);

struct GrowthCurve {
  std::optional<int> launch_hour;  // set when grouped by launch hour
  std::vector<std::pair<double, double>> points;  // (t, mean cumulative count)
};

// Pointwise mean of cumulative counts across traces on the dt grid, carrying
// each trace's last value forward. When normalize_by_launch_hour is set, one
// curve per launch hour (ascending); otherwise a single curve.
std::vector<GrowthCurve> mean_growth_curve(const Dataset& d, double dt,
                                           bool normalize_by_launch_hour);

// JSON round trip for SimConfig (see README for the schema).
SimConfig parse_sim_config(const std::string& json_text);
std::string serialize_sim_config(const SimConfig& cfg);

}  // namespace dealflow
