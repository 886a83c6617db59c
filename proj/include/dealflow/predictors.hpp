#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dealflow/trace.hpp"

namespace dealflow {

// ---------------------------------------------------------------------------
// baseline1 / baseline2
// ---------------------------------------------------------------------------

// The current count is the prediction.
std::int64_t predict_baseline1(std::int64_t n_t1);

struct Baseline2Params {
  double slope = 1.0;
  double intercept = 0.0;
};

// OLS of n_t2 on n_t1 with intercept. Throws ValidationError on fewer than 2
// pairs or a degenerate design (all n_t1 identical).
Baseline2Params train_baseline2(std::span<const std::pair<double, double>> pairs);

// slope * n_t1 + intercept, rounded, clamped at 0.
std::int64_t predict_baseline2(const Baseline2Params& p, std::int64_t n_t1);

// ---------------------------------------------------------------------------
// multivariate linear regression of log final purchases on deal attributes
// ---------------------------------------------------------------------------

// Vocabularies for the one-hot blocks, in sorted order so encoding is a pure
// function of the training set. Empty-string labels mean "no label" and do
// not enter the vocabulary.
struct CategoricalEncoder {
  std::vector<std::string> launch_days;
  std::vector<std::string> categories;
  std::vector<std::string> cities;

  std::size_t feature_count() const {
    return 7 + launch_days.size() + categories.size() + cities.size();
  }
};

CategoricalEncoder build_encoder(const Dataset& ds);

// [1, log theta, featured, duration, limited, price, discount, one-hot day,
// one-hot category, one-hot city]; an unseen label leaves its block all zero.
// Throws ValidationError when tipping_point < 1 (log undefined).
std::vector<double> encode_attributes(const DealAttributes& a,
                                      const CategoricalEncoder& enc);

struct MlrModel {
  CategoricalEncoder encoder;
  std::vector<double> coefficients;     // one per feature
  std::vector<double> standard_errors;  // same length
  std::vector<double> t_values;
  std::vector<double> p_values;
  double r2 = 0.0;
  std::size_t rank = 0;
  bool collinear = false;  // rank < feature count; minimum-norm solution
  std::size_t n_rows = 0;
};

// Least squares of log N_target on encoded attributes, solved by SVD with
// singular values below 1e-10 of the largest treated as zero (minimum-norm
// solution under collinearity). target_hour selects the count to regress on
// (final observed count when absent). Rows need attributes and a count >= 1
// at the target. Throws ValidationError with fewer than 2 usable rows.
MlrModel train_mlr(const Dataset& ds, std::optional<double> target_hour = std::nullopt);

// round(exp(features . coefficients)), never negative.
std::int64_t predict_mlr(const MlrModel& m, const DealAttributes& a);

// ---------------------------------------------------------------------------
// social-propagation (log-log) predictor
// ---------------------------------------------------------------------------

struct SpEntry {
  double t1 = 0.0;
  double t2 = 0.0;
  double slope = 1.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // zero count at t1 or t2
};

struct SpModel {
  std::vector<SpEntry> entries;

  const SpEntry* find(double t1, double t2) const;
};

// OLS of log N_t2 on log N_t1 over traces with positive counts at both times.
// Throws InsufficientDataError with fewer than 2 usable traces.
SpEntry train_sp(const Dataset& ds, double t1, double t2);

// exp(slope * log(n_t1) + intercept), rounded. n_t1 = 0 falls back to
// baseline1 (returns 0). Throws ValidationError for an untrained (t1, t2).
std::int64_t predict_sp(const SpModel& m, std::int64_t n_t1, double t1, double t2);

// ---------------------------------------------------------------------------
// hybrid predictor-selection policies
// ---------------------------------------------------------------------------

enum class HybridMode { kGroupon, kLivingsocial };

struct HybridPolicy {
  HybridMode mode = HybridMode::kGroupon;
  double cutoff_hours = 3.0;             // livingsocial: baseline1 before this
  std::int64_t popularity_override = 100;  // groupon: first-hour count above
                                           // this forces baseline1
};

// groupon mode: baseline1 when the first-hour count exceeds the popularity
// override or the deal has not tipped by t1 (requires attributes for theta);
// SP otherwise. livingsocial mode: baseline1 when t1 < cutoff, SP otherwise.
// The trace argument is the observed prefix up to t1.
std::int64_t predict_hybrid(const HybridPolicy& policy, const PurchaseTrace& prefix,
                            double t1, double t2, const SpModel& sp);

// ---------------------------------------------------------------------------
// model bundle serialization (CLI train/predict interchange)
// ---------------------------------------------------------------------------

struct ModelBundle {
  double t2 = 24.0;
  std::vector<std::pair<double, Baseline2Params>> b2;  // keyed by t1
  SpModel sp;
  std::optional<MlrModel> mlr;

  const Baseline2Params* find_b2(double t1) const;
};

std::string serialize_models(const ModelBundle& b);
ModelBundle parse_models(const std::string& json_text);

}  // namespace dealflow
