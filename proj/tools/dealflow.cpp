#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dealflow/errors.hpp"
#include "dealflow/eval.hpp"
#include "dealflow/predictors.hpp"
#include "dealflow/propagation.hpp"
#include "dealflow/renewal.hpp"
#include "dealflow/simulate.hpp"
#include "dealflow/trace.hpp"
#include "dealflow/trace_io.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;         // bad flags, unreadable/invalid inputs
constexpr int kExitInsufficient = 3;  // not enough data for the estimate

using dealflow::Dataset;
using dealflow::DealAttributes;
using dealflow::PurchaseTrace;

struct ManifestInfo {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Written beside the primary output as <out>.manifest.json. The manifest
// records everything needed to reproduce the run; duration is informational
// and the only field that varies between identical runs.
void write_manifest(const std::string& primary_out, const ManifestInfo& info,
                    std::chrono::steady_clock::time_point started) {
  const auto elapsed = std::chrono::steady_clock::now() - started;
  nlohmann::json j;
  j["subcommand"] = info.subcommand;
  j["config"] = info.config;
  j["inputs"] = info.inputs;
  j["outputs"] = info.outputs;
  j["seed"] = info.seed;
  j["threads"] = info.threads;
  j["tool_version"] = kToolVersion;
  j["duration_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  dealflow::write_file(primary_out + ".manifest.json", j.dump(2) + "\n");
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Dataset load_traces(const std::string& path, const std::string& attrs_path) {
  Dataset ds = dealflow::parse_trace_csv(dealflow::read_file(path));
  if (!attrs_path.empty()) {
    const auto attrs = dealflow::parse_attributes_json(dealflow::read_file(attrs_path));
    dealflow::attach_attributes(ds, attrs);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string config_path;
  std::size_t n_deals = 0;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string attrs_out;
  unsigned threads = 1;
};

int cmd_simulate(const SimulateOpts& opt) {
  const auto started = std::chrono::steady_clock::now();
  if (opt.n_deals < 1) throw dealflow::ValidationError("--n-deals must be >= 1");
  dealflow::SimConfig cfg = dealflow::parse_sim_config(dealflow::read_file(opt.config_path));
  if (opt.seed) cfg.seed = *opt.seed;

  const dealflow::SimResult result = dealflow::simulate_cohort(cfg, opt.n_deals, opt.threads);
  dealflow::write_file(opt.out_path, dealflow::serialize_trace_csv(result.dataset));

  ManifestInfo info;
  info.subcommand = "simulate";
  info.config = nlohmann::json::parse(dealflow::serialize_sim_config(cfg));
  info.config["n_deals"] = opt.n_deals;
  info.inputs = {opt.config_path};
  info.outputs = {opt.out_path};
  info.seed = cfg.seed;
  info.threads = opt.threads;

  if (!opt.attrs_out.empty()) {
    std::vector<std::pair<std::string, DealAttributes>> attrs;
    attrs.reserve(result.dataset.traces.size());
    for (const auto& tr : result.dataset.traces) {
      DealAttributes a;
      a.tipping_point = cfg.theta;
      a.duration_hours = cfg.lifetime_hours;
      a.limited = cfg.max_sales.has_value();
      attrs.emplace_back(tr.deal_id, a);
    }
    dealflow::write_file(opt.attrs_out, dealflow::serialize_attributes_json(attrs));
    info.outputs.push_back(opt.attrs_out);
  }
  write_manifest(opt.out_path, info, started);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOpts {
  std::string traces_path;
  std::optional<std::int64_t> tipping_point;
  std::optional<double> inflection_hour;
  std::optional<int> decay_horizon;
  std::int64_t drop_threshold = 10;
  std::string out_path;
};

constexpr std::size_t kMinTippedDeals = 10;

int cmd_fit(const FitOpts& opt) {
  const auto started = std::chrono::steady_clock::now();
  if (opt.tipping_point && opt.inflection_hour) {
    throw dealflow::ValidationError("--tipping-point and --inflection-hour are exclusive");
  }
  Dataset raw = dealflow::parse_trace_csv(dealflow::read_file(opt.traces_path));
  auto [ds, cleaning] = dealflow::clean_dataset(raw, opt.drop_threshold);

  // Pre-inflection prefix of each trace feeds the interarrival fit.
  std::vector<double> interarrivals;
  std::vector<std::pair<const PurchaseTrace*, double>> inflected;  // trace, hour
  for (const auto& tr : ds.traces) {
    std::optional<double> inflection;
    if (opt.tipping_point) {
      inflection = dealflow::first_time_reaching(tr, *opt.tipping_point);
    } else if (opt.inflection_hour) {
      if (*opt.inflection_hour < tr.lifetime_hours) inflection = *opt.inflection_hour;
    }
    PurchaseTrace prefix = tr;
    if (inflection) {
      prefix.samples.clear();
      for (const auto& s : tr.samples) {
        if (s.t <= *inflection + 1e-12) prefix.samples.push_back(s);
      }
      inflected.emplace_back(&tr, *inflection);
    }
    const auto gaps = dealflow::interarrival_times(prefix);
    interarrivals.insert(interarrivals.end(), gaps.begin(), gaps.end());
  }
  const dealflow::RenewalModel renewal = dealflow::fit_exponential(interarrivals);

  nlohmann::json out;
  out["renewal"] = {{"rate", renewal.rate},
                    {"fit_r2", renewal.fit_r2},
                    {"n_obs", renewal.n_obs}};
  out["cleaning"] = {{"kept", cleaning.kept},
                     {"dropped", cleaning.dropped},
                     {"threshold", cleaning.threshold}};

  const bool decay_requested = opt.tipping_point || opt.inflection_hour;
  if (decay_requested) {
    if (inflected.size() < kMinTippedDeals) {
      throw dealflow::InsufficientDataError(
          "decay estimation needs at least " + std::to_string(kMinTippedDeals) +
          " tipped deals; found " + std::to_string(inflected.size()));
    }
    Dataset aligned;
    double min_span = 1e300;
    for (const auto& [tr, hour] : inflected) {
      PurchaseTrace shifted = dealflow::align_at_inflection(*tr, hour);
      if (!shifted.samples.empty()) {
        min_span = std::min(min_span, shifted.samples.back().t);
      }
      aligned.traces.push_back(std::move(shifted));
    }
    int horizon;
    if (opt.decay_horizon) {
      horizon = *opt.decay_horizon;
    } else {
      horizon = static_cast<int>(std::floor(min_span + 1e-9));
      horizon = std::clamp(horizon, 3, 48);
    }
    dealflow::NoveltyDecay decay = dealflow::estimate_decay(aligned, horizon);
    decay = dealflow::fit_decay_exponential(decay);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& p : decay.r_table) table.push_back({p.t, p.r});
    out["decay"] = {{"r_table", std::move(table)},
                    {"a", *decay.a},
                    {"b", *decay.b},
                    {"fit_r2", decay.fit_r2},
                    {"horizon", horizon},
                    {"traces_used", decay.traces_used},
                    {"traces_excluded", decay.traces_excluded}};
  }
  dealflow::write_file(opt.out_path, out.dump(2) + "\n");

  ManifestInfo info;
  info.subcommand = "fit";
  if (opt.tipping_point) info.config["tipping_point"] = *opt.tipping_point;
  if (opt.inflection_hour) info.config["inflection_hour"] = *opt.inflection_hour;
  if (opt.decay_horizon) info.config["decay_horizon"] = *opt.decay_horizon;
  info.config["drop_threshold"] = opt.drop_threshold;
  info.inputs = {opt.traces_path};
  info.outputs = {opt.out_path};
  write_manifest(opt.out_path, info, started);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string traces_path;
  std::string attrs_path;
  std::string predictors = "b2,sp";
  double t2 = 24.0;
  std::string t1_list;  // comma-separated hours; default 1..t2-1 integers
  std::string out_path;
};

int cmd_train(const TrainOpts& opt) {
  const auto started = std::chrono::steady_clock::now();
  const auto predictor_names = split_csv_list(opt.predictors);
  bool want_b2 = false, want_sp = false, want_mlr = false;
  for (const auto& p : predictor_names) {
    if (p == "b2") {
      want_b2 = true;
    } else if (p == "sp") {
      want_sp = true;
    } else if (p == "mlr") {
      want_mlr = true;
    } else if (p != "b1") {  // baseline1 has no parameters to train
      throw dealflow::ValidationError("unknown predictor '" + p + "'");
    }
  }
  if (want_mlr && opt.attrs_path.empty()) {
    throw dealflow::ValidationError("--predictors mlr requires --attrs");
  }
  Dataset ds = load_traces(opt.traces_path, opt.attrs_path);

  std::vector<double> t1s;
  if (opt.t1_list.empty()) {
    for (int h = 1; h < static_cast<int>(opt.t2); ++h) t1s.push_back(h);
  } else {
    for (const auto& tok : split_csv_list(opt.t1_list)) t1s.push_back(std::stod(tok));
  }
  for (double t1 : t1s) {
    if (!(t1 > 0.0 && t1 < opt.t2)) {
      throw dealflow::ValidationError("--t1-list entries must lie in (0, t2)");
    }
  }

  dealflow::ModelBundle bundle;
  bundle.t2 = opt.t2;
  std::size_t trained = 0;
  for (double t1 : t1s) {
    if (want_b2) {
      std::vector<std::pair<double, double>> pairs;
      for (const auto& tr : ds.traces) {
        if (tr.samples.empty() || tr.samples.back().t + 1e-9 < opt.t2) continue;
        pairs.emplace_back(static_cast<double>(tr.count_at(t1)),
                           static_cast<double>(tr.count_at(opt.t2)));
      }
      try {
        bundle.b2.emplace_back(t1, dealflow::train_baseline2(pairs));
        ++trained;
      } catch (const dealflow::ValidationError& e) {
        std::cerr << "warning: baseline2 at t1=" << t1 << ": " << e.what() << "\n";
      }
    }
    if (want_sp) {
      try {
        bundle.sp.entries.push_back(dealflow::train_sp(ds, t1, opt.t2));
        ++trained;
      } catch (const dealflow::InsufficientDataError& e) {
        std::cerr << "warning: sp at t1=" << t1 << ": " << e.what() << "\n";
      }
    }
  }
  if (want_mlr) {
    bundle.mlr = dealflow::train_mlr(ds, opt.t2);
    if (bundle.mlr->collinear) {
      std::cerr << "warning: mlr design is rank-deficient (rank " << bundle.mlr->rank
                << " of " << bundle.mlr->encoder.feature_count()
                << "); minimum-norm solution\n";
    }
    ++trained;
  }
  if (trained == 0) {
    throw dealflow::InsufficientDataError("no predictor could be trained on this dataset");
  }
  dealflow::write_file(opt.out_path, dealflow::serialize_models(bundle));

  ManifestInfo info;
  info.subcommand = "train";
  info.config["predictors"] = predictor_names;
  info.config["t2"] = opt.t2;
  info.config["t1s"] = t1s;
  info.inputs = {opt.traces_path};
  if (!opt.attrs_path.empty()) info.inputs.push_back(opt.attrs_path);
  info.outputs = {opt.out_path};
  write_manifest(opt.out_path, info, started);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOpts {
  std::string models_path;
  std::string prefix_path;
  double t1 = 12.0;
  std::string policy;     // groupon | livingsocial
  std::string predictor;  // b1 | b2 | sp | mlr
  std::string attrs_path;
  std::string out_path;  // empty -> stdout
};

int cmd_predict(const PredictOpts& opt) {
  const auto started = std::chrono::steady_clock::now();
  if (opt.policy.empty() == opt.predictor.empty()) {
    throw dealflow::ValidationError("exactly one of --policy or --predictor is required");
  }
  const dealflow::ModelBundle bundle =
      dealflow::parse_models(dealflow::read_file(opt.models_path));
  if (opt.t1 <= 0.0 || opt.t1 >= bundle.t2) {
    throw dealflow::ValidationError("--t1 must lie in (0, t2) of the trained models");
  }
  Dataset prefixes = load_traces(opt.prefix_path, opt.attrs_path);

  dealflow::HybridPolicy policy;
  if (opt.policy == "groupon") {
    policy.mode = dealflow::HybridMode::kGroupon;
  } else if (opt.policy == "livingsocial") {
    policy.mode = dealflow::HybridMode::kLivingsocial;
  } else if (!opt.policy.empty()) {
    throw dealflow::ValidationError("--policy must be 'groupon' or 'livingsocial'");
  }
  if (!opt.predictor.empty() && opt.predictor != "b1" && opt.predictor != "b2" &&
      opt.predictor != "sp" && opt.predictor != "mlr") {
    throw dealflow::ValidationError("--predictor must be one of b1, b2, sp, mlr");
  }
  if (opt.predictor == "mlr" && opt.attrs_path.empty()) {
    throw dealflow::ValidationError("--predictor mlr requires --attrs");
  }
  if (opt.predictor == "mlr" && !bundle.mlr) {
    throw dealflow::ValidationError("models file has no mlr model");
  }
  if (opt.predictor == "b2" && bundle.find_b2(opt.t1) == nullptr) {
    throw dealflow::ValidationError("models file has no baseline2 entry for t1=" +
                                    std::to_string(opt.t1));
  }

  std::string out = "deal_id,t1,predicted_n_t2\n";
  for (const auto& tr : prefixes.traces) {
    const std::int64_t n1 = tr.count_at(opt.t1);
    std::int64_t pred = 0;
    if (!opt.policy.empty()) {
      pred = dealflow::predict_hybrid(policy, tr, opt.t1, bundle.t2, bundle.sp);
    } else if (opt.predictor == "b1") {
      pred = dealflow::predict_baseline1(n1);
    } else if (opt.predictor == "b2") {
      pred = dealflow::predict_baseline2(*bundle.find_b2(opt.t1), n1);
    } else if (opt.predictor == "sp") {
      pred = dealflow::predict_sp(bundle.sp, n1, opt.t1, bundle.t2);
    } else {  // mlr
      if (!tr.attributes) {
        throw dealflow::ValidationError("no attributes for deal '" + tr.deal_id + "'");
      }
      pred = dealflow::predict_mlr(*bundle.mlr, *tr.attributes);
    }
    out += tr.deal_id + "," + dealflow::format_double(opt.t1) + "," +
           std::to_string(pred) + "\n";
  }

  if (opt.out_path.empty()) {
    std::cout << out;
  } else {
    dealflow::write_file(opt.out_path, out);
    ManifestInfo info;
    info.subcommand = "predict";
    info.config["t1"] = opt.t1;
    if (!opt.policy.empty()) info.config["policy"] = opt.policy;
    if (!opt.predictor.empty()) info.config["predictor"] = opt.predictor;
    info.inputs = {opt.models_path, opt.prefix_path};
    if (!opt.attrs_path.empty()) info.inputs.push_back(opt.attrs_path);
    info.outputs = {opt.out_path};
    write_manifest(opt.out_path, info, started);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOpts {
  std::string traces_path;
  std::string attrs_path;
  std::string config_path;
  std::string out_path;
  std::string cdf_out;  // default: <out stem>_cdf.csv
};

int cmd_evaluate(const EvaluateOpts& opt) {
  const auto started = std::chrono::steady_clock::now();
  const dealflow::EvalConfig cfg =
      dealflow::parse_eval_config(dealflow::read_file(opt.config_path));
  Dataset ds = load_traces(opt.traces_path, opt.attrs_path);
  const dealflow::EvalReport report = dealflow::evaluate(cfg, ds);

  std::string cdf_path = opt.cdf_out;
  if (cdf_path.empty()) {
    const auto dot = opt.out_path.rfind('.');
    cdf_path = dot == std::string::npos ? opt.out_path + "_cdf"
                                        : opt.out_path.substr(0, dot) + "_cdf" +
                                              opt.out_path.substr(dot);
  }
  dealflow::write_file(opt.out_path, dealflow::report_to_csv(report));
  dealflow::write_file(cdf_path, dealflow::report_cdf_to_csv(report));

  ManifestInfo info;
  info.subcommand = "evaluate";
  info.config = nlohmann::json::parse(dealflow::serialize_eval_config(cfg));
  info.inputs = {opt.traces_path, opt.config_path};
  if (!opt.attrs_path.empty()) info.inputs.push_back(opt.attrs_path);
  info.outputs = {opt.out_path, cdf_path};
  info.seed = cfg.split_seed;
  write_manifest(opt.out_path, info, started);
  return kExitOk;
}

template <typename Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const dealflow::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const dealflow::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dealflow::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase group-deal purchase model: simulate, fit, train, predict, evaluate"};
  app.require_subcommand(1);

  unsigned threads = 1;
  app.add_option("--threads", threads, "worker thread count")
      ->envname("DEALFLOW_THREADS")
      ->check(CLI::Range(1u, 256u));

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic cohort");
  sim_cmd->add_option("--config", sim.config_path, "sim config JSON")->required();
  sim_cmd->add_option("--n-deals", sim.n_deals, "number of deals")->required();
  sim_cmd->add_option("--out", sim.out_path, "output trace CSV")->required();
  sim_cmd->add_option("--seed", sim.seed, "override config seed");
  sim_cmd->add_option("--attrs-out", sim.attrs_out, "also write a deal attributes JSON");

  FitOpts fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit renewal rate and novelty decay from traces");
  fit_cmd->add_option("--traces", fit.traces_path, "input trace CSV")->required();
  fit_cmd->add_option("--tipping-point", fit.tipping_point,
                      "align decay at each deal's theta-th purchase");
  fit_cmd->add_option("--inflection-hour", fit.inflection_hour,
                      "align decay at a fixed hour");
  fit_cmd->add_option("--decay-horizon", fit.decay_horizon,
                      "hours of decay table to estimate (default: auto)");
  fit_cmd->add_option("--drop-threshold", fit.drop_threshold,
                      "cleaning drop threshold (purchases)");
  fit_cmd->add_option("--out", fit.out_path, "output model JSON")->required();

  TrainOpts train;
  auto* train_cmd = app.add_subcommand("train", "train predictors on traces");
  train_cmd->add_option("--traces", train.traces_path, "input trace CSV")->required();
  train_cmd->add_option("--attrs", train.attrs_path, "deal attributes JSON");
  train_cmd->add_option("--predictors", train.predictors, "comma list of b2,sp,mlr");
  train_cmd->add_option("--t2", train.t2, "prediction target hour");
  train_cmd->add_option("--t1-list", train.t1_list,
                        "comma list of observation hours (default 1..t2-1)");
  train_cmd->add_option("--out", train.out_path, "output models JSON")->required();

  PredictOpts predict;
  auto* predict_cmd = app.add_subcommand("predict", "predict final counts from prefixes");
  predict_cmd->add_option("--models", predict.models_path, "models JSON from train")->required();
  predict_cmd->add_option("--trace-prefix", predict.prefix_path,
                          "trace CSV observed up to t1")->required();
  predict_cmd->add_option("--t1", predict.t1, "observation hour")->required();
  predict_cmd->add_option("--policy", predict.policy, "hybrid policy: groupon|livingsocial");
  predict_cmd->add_option("--predictor", predict.predictor, "single predictor: b1|b2|sp|mlr");
  predict_cmd->add_option("--attrs", predict.attrs_path, "deal attributes JSON");
  predict_cmd->add_option("--out", predict.out_path, "output CSV (default stdout)");

  EvaluateOpts eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "train/test relative-error report");
  eval_cmd->add_option("--traces", eval.traces_path, "input trace CSV")->required();
  eval_cmd->add_option("--attrs", eval.attrs_path, "deal attributes JSON");
  eval_cmd->add_option("--config", eval.config_path, "eval config JSON")->required();
  eval_cmd->add_option("--out", eval.out_path, "output report CSV")->required();
  eval_cmd->add_option("--cdf-out", eval.cdf_out, "error CDF CSV (default <out>_cdf.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  sim.threads = threads;
  if (sim_cmd->parsed()) return run_guarded([&] { return cmd_simulate(sim); });
  if (fit_cmd->parsed()) return run_guarded([&] { return cmd_fit(fit); });
  if (train_cmd->parsed()) return run_guarded([&] { return cmd_train(train); });
  if (predict_cmd->parsed()) return run_guarded([&] { return cmd_predict(predict); });
  if (eval_cmd->parsed()) return run_guarded([&] { return cmd_evaluate(eval); });
  return kExitUsage;
}
