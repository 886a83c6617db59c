#include "dealflow/eval.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "dealflow/errors.hpp"
#include "dealflow/rng.hpp"
#include "dealflow/stats.hpp"
#include "dealflow/trace_io.hpp"

namespace dealflow {

double relative_error(std::int64_t real, std::int64_t predicted) {
  if (real < 1) throw ValidationError("relative_error: real count must be >= 1");
  return std::abs(static_cast<double>(real) - static_cast<double>(predicted)) /
         static_cast<double>(real);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio,
                                          std::uint64_t seed) {
  if (d.traces.empty()) throw ValidationError("split_dataset: empty dataset");
  if (ratio <= 0.0 || ratio >= 1.0) {
    throw ValidationError("split_dataset: ratio must be in (0, 1)");
  }
  const std::size_t n = d.traces.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Explicit Fisher-Yates: std::shuffle's permutation is implementation-
  // defined, and split determinism is part of the reproducibility contract.
  RngStream rng(seed, 0x5b117d5eedULL);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i + 1));
    std::swap(order[i], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n) - 1e-9));
  Dataset train, test;
  train.provenance = d.provenance;
  test.provenance = d.provenance;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).traces.push_back(d.traces[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

void EvalConfig::validate() const {
  if (split_ratio <= 0.0 || split_ratio >= 1.0) {
    throw ValidationError("eval config: split_ratio must be in (0, 1)");
  }
  if (t2 <= 0.0) throw ValidationError("eval config: t2 must be positive");
  if (horizons.empty()) throw ValidationError("eval config: horizons must be non-empty");
  for (double h : horizons) {
    if (h <= 0.0 || h >= t2) {
      throw ValidationError("eval config: horizons must lie in (0, t2)");
    }
  }
  if (cdf_horizon <= 0.0 || cdf_horizon >= t2) {
    throw ValidationError("eval config: cdf_horizon must lie in (0, t2)");
  }
  if (predictors.empty()) throw ValidationError("eval config: predictors must be non-empty");
  for (const auto& p : predictors) {
    if (p != "b1" && p != "b2" && p != "sp" && p != "mlr" && p != "hybrid") {
      throw ValidationError("eval config: unknown predictor '" + p + "'");
    }
  }
}

namespace {

bool trace_tipped(const PurchaseTrace& tr) { return tr.tipped_at.has_value(); }

// Per-horizon trained state for one evaluation run.
struct TrainedModels {
  std::map<double, Baseline2Params> b2;  // keyed by horizon
  SpModel sp;
  std::optional<MlrModel> mlr;
};

}  // namespace

EvalReport evaluate(const EvalConfig& cfg, const Dataset& d) {
  cfg.validate();

  EvalReport report;
  report.predictors = cfg.predictors;
  report.horizons = cfg.horizons;
  std::sort(report.horizons.begin(), report.horizons.end());
  report.cdf_horizon = cfg.cdf_horizon;

  // Deals must cover the prediction target; the metric needs N_t2 >= 1.
  Dataset usable;
  usable.provenance = d.provenance;
  for (const auto& tr : d.traces) {
    if (tr.samples.empty() || tr.samples.back().t + 1e-9 < cfg.t2 ||
        tr.lifetime_hours + 1e-9 < cfg.t2) {
      ++report.excluded_short;
      continue;
    }
    if (tr.count_at(cfg.t2) < 1) {
      ++report.excluded_zero_target;
      continue;
    }
    if (cfg.exclude_untipped && !trace_tipped(tr)) {
      ++report.excluded_untipped;
      continue;
    }
    usable.traces.push_back(tr);
  }
  if (usable.traces.size() < 2) {
    throw InsufficientDataError("evaluate: fewer than 2 usable deals covering t2");
  }

  auto [train, test] = split_dataset(usable, cfg.split_ratio, cfg.split_seed);
  report.train_deals = train.traces.size();
  report.test_deals = test.traces.size();

  const bool want_b2 = std::count(cfg.predictors.begin(), cfg.predictors.end(), "b2") > 0;
  const bool want_sp = std::count(cfg.predictors.begin(), cfg.predictors.end(), "sp") > 0;
  const bool want_mlr = std::count(cfg.predictors.begin(), cfg.predictors.end(), "mlr") > 0;
  const bool want_hybrid =
      std::count(cfg.predictors.begin(), cfg.predictors.end(), "hybrid") > 0;

  // The CDF horizon needs trained models even when absent from `horizons`.
  std::vector<double> train_horizons = report.horizons;
  if (std::count(train_horizons.begin(), train_horizons.end(), cfg.cdf_horizon) == 0) {
    train_horizons.push_back(cfg.cdf_horizon);
  }

  TrainedModels models;
  for (double h : train_horizons) {
    if (want_b2) {
      std::vector<std::pair<double, double>> pairs;
      pairs.reserve(train.traces.size());
      for (const auto& tr : train.traces) {
        pairs.emplace_back(static_cast<double>(tr.count_at(h)),
                           static_cast<double>(tr.count_at(cfg.t2)));
      }
      try {
        models.b2.emplace(h, train_baseline2(pairs));
      } catch (const ValidationError&) {
        // degenerate design at this horizon; cell stays absent
      }
    }
    if (want_sp || want_hybrid) {
      try {
        models.sp.entries.push_back(train_sp(train, h, cfg.t2));
      } catch (const InsufficientDataError&) {
        // too few positive-count traces; cell stays absent
      }
    }
  }
  if (want_mlr) {
    try {
      models.mlr = train_mlr(train, cfg.t2);
    } catch (const ValidationError&) {
      // no usable attribute rows; all mlr cells stay absent
    }
  }

  // Per-deal errors of one predictor at one horizon, over the test split.
  auto errors_at = [&](const std::string& predictor, double h) -> std::optional<std::vector<double>> {
    std::vector<double> errs;
    errs.reserve(test.traces.size());
    if (predictor == "b2" && models.b2.find(h) == models.b2.end()) return std::nullopt;
    if ((predictor == "sp" || predictor == "hybrid") &&
        models.sp.find(h, cfg.t2) == nullptr) {
      return std::nullopt;
    }
    if (predictor == "mlr" && !models.mlr) return std::nullopt;
    for (const auto& tr : test.traces) {
      const std::int64_t real = tr.count_at(cfg.t2);
      const std::int64_t n1 = tr.count_at(h);
      std::int64_t pred = 0;
      if (predictor == "b1") {
        pred = predict_baseline1(n1);
      } else if (predictor == "b2") {
        pred = predict_baseline2(models.b2.at(h), n1);
      } else if (predictor == "sp") {
        pred = predict_sp(models.sp, n1, h, cfg.t2);
      } else if (predictor == "mlr") {
        if (!tr.attributes) continue;  // prediction impossible for this deal
        pred = predict_mlr(*models.mlr, *tr.attributes);
      } else {  // hybrid
        try {
          pred = predict_hybrid(cfg.policy, tr, h, cfg.t2, models.sp);
        } catch (const ValidationError&) {
          continue;  // groupon mode without tipping information
        }
      }
      errs.push_back(relative_error(real, pred));
    }
    if (errs.empty()) return std::nullopt;
    return errs;
  };

  for (const auto& predictor : report.predictors) {
    auto& row = report.cells[predictor];
    row.resize(report.horizons.size());
    for (std::size_t i = 0; i < report.horizons.size(); ++i) {
      const auto errs = errors_at(predictor, report.horizons[i]);
      if (!errs) continue;
      const MeanSem ms = mean_sem(*errs);
      row[i] = {ms.mean, ms.sem, ms.n, true};
    }
    auto cdf_errs = errors_at(predictor, cfg.cdf_horizon);
    if (cdf_errs) {
      std::sort(cdf_errs->begin(), cdf_errs->end());
      report.error_cdf[predictor] = std::move(*cdf_errs);
    }
  }
  return report;
}

std::string report_to_csv(const EvalReport& r) {
  std::string out = "predictor,horizon_hours,mean_rel_err,stderr,n\n";
  for (const auto& predictor : r.predictors) {
    const auto it = r.cells.find(predictor);
    if (it == r.cells.end()) continue;
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
      const EvalCell& c = it->second[i];
      if (!c.present) continue;
      out += predictor;
      out.push_back(',');
      out += format_double(r.horizons[i]);
      out.push_back(',');
      out += format_double(c.mean_rel_err);
      out.push_back(',');
      out += format_double(c.sem);
      out.push_back(',');
      out += std::to_string(c.n);
      out.push_back('\n');
    }
  }
  return out;
}

std::string report_cdf_to_csv(const EvalReport& r) {
  std::string out = "predictor,rel_err,cum_fraction\n";
  for (const auto& predictor : r.predictors) {
    const auto it = r.error_cdf.find(predictor);
    if (it == r.error_cdf.end()) continue;
    const auto& errs = it->second;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      out += predictor;
      out.push_back(',');
      out += format_double(errs[i]);
      out.push_back(',');
      out += format_double(static_cast<double>(i + 1) / static_cast<double>(errs.size()));
      out.push_back('\n');
    }
  }
  return out;
}

EvalConfig parse_eval_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("eval config JSON: ") + e.what());
  }
  EvalConfig cfg;
  cfg.horizons.clear();
  try {
    cfg.split_ratio = j.value("split_ratio", 0.5);
    cfg.split_seed = j.value("split_seed", std::uint64_t{0});
    if (j.contains("horizons")) {
      cfg.horizons = j["horizons"].get<std::vector<double>>();
    }
    cfg.t2 = j.value("t2_hours", 24.0);
    if (j.contains("predictors")) {
      cfg.predictors = j["predictors"].get<std::vector<std::string>>();
    }
    if (j.contains("policy")) {
      const auto& p = j["policy"];
      const std::string mode = p.value("mode", std::string("groupon"));
      if (mode == "groupon") {
        cfg.policy.mode = HybridMode::kGroupon;
      } else if (mode == "livingsocial") {
        cfg.policy.mode = HybridMode::kLivingsocial;
      } else {
        throw ValidationError("eval config: policy.mode must be 'groupon' or 'livingsocial'");
      }
      cfg.policy.cutoff_hours = p.value("cutoff_hours", 3.0);
      cfg.policy.popularity_override = p.value("popularity_override", std::int64_t{100});
    }
    cfg.cdf_horizon = j.value("cdf_horizon", 12.0);
    cfg.exclude_untipped = j.value("exclude_untipped", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eval config: bad field type: ") + e.what());
  }
  if (cfg.horizons.empty()) {
    for (int h = 1; h < static_cast<int>(cfg.t2); ++h) {
      cfg.horizons.push_back(static_cast<double>(h));
    }
  }
  if (cfg.predictors.empty()) cfg.predictors = {"b1", "b2", "sp"};
  cfg.validate();
  return cfg;
}

std::string serialize_eval_config(const EvalConfig& cfg) {
  nlohmann::json j;
  j["split_ratio"] = cfg.split_ratio;
  j["split_seed"] = cfg.split_seed;
  j["horizons"] = cfg.horizons;
  j["t2_hours"] = cfg.t2;
  j["predictors"] = cfg.predictors;
  j["policy"] = {
      {"mode", cfg.policy.mode == HybridMode::kGroupon ? "groupon" : "livingsocial"},
      {"cutoff_hours", cfg.policy.cutoff_hours},
      {"popularity_override", cfg.policy.popularity_override}};
  j["cdf_horizon"] = cfg.cdf_horizon;
  j["exclude_untipped"] = cfg.exclude_untipped;
  return j.dump(2) + "\n";
}

}  // namespace dealflow
