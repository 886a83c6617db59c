#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dealflow/predictors.hpp"
#include "dealflow/trace.hpp"

namespace dealflow {

// |real - predicted| / real. Throws ValidationError when real < 1.
double relative_error(std::int64_t real, std::int64_t predicted);

// Deterministic shuffle by seed, then the first ceil(ratio * n) traces form
// the train split and the rest the test split.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio,
                                          std::uint64_t seed);

struct EvalConfig {
  double split_ratio = 0.5;
  std::uint64_t split_seed = 0;
  std::vector<double> horizons;  // observation hours t1; default 1..23
  double t2 = 24.0;              // prediction target hour
  std::vector<std::string> predictors;  // of: b1, b2, sp, mlr, hybrid
  HybridPolicy policy;                  // used by the hybrid predictor
  double cdf_horizon = 12.0;            // horizon for the error CDF
  // Drop test/train deals that never tipped. Requires tipped_at populated
  // (simulated tipping-rule cohorts, or traces with attached attributes).
  bool exclude_untipped = false;

  void validate() const;  // throws ValidationError naming the field
};

struct EvalCell {
  double mean_rel_err = 0.0;
  double sem = 0.0;       // standard error of the mean
  std::size_t n = 0;      // test deals contributing
  bool present = false;   // false when the predictor was untrainable here
};

struct EvalReport {
  std::vector<std::string> predictors;  // config order
  std::vector<double> horizons;         // ascending
  // cells[predictor][horizon index]
  std::map<std::string, std::vector<EvalCell>> cells;
  double cdf_horizon = 12.0;
  // sorted per-deal errors at cdf_horizon (empty when untrainable there)
  std::map<std::string, std::vector<double>> error_cdf;
  std::size_t train_deals = 0;
  std::size_t test_deals = 0;
  std::size_t excluded_short = 0;        // lifetime/coverage below t2
  std::size_t excluded_zero_target = 0;  // N_t2 = 0 (metric undefined)
  std::size_t excluded_untipped = 0;
};

// Trains every requested predictor on the train split per horizon, predicts
// N_t2 on the test split, and aggregates mean relative error, its standard
// error, and the per-deal error CDF at cdf_horizon. A predictor that cannot
// be trained at a horizon leaves that cell absent and the run continues.
EvalReport evaluate(const EvalConfig& cfg, const Dataset& d);

// `predictor,horizon_hours,mean_rel_err,stderr,n` (absent cells skipped).
std::string report_to_csv(const EvalReport& r);
// `predictor,rel_err,cum_fraction`, cumulative fractions ending at 1.
std::string report_cdf_to_csv(const EvalReport& r);

EvalConfig parse_eval_config(const std::string& json_text);
std::string serialize_eval_config(const EvalConfig& cfg);

}  // namespace dealflow
