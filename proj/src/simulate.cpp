#include "dealflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include <json.hpp>

#include "dealflow/errors.hpp"
#include "dealflow/rng.hpp"

namespace dealflow {

void SimConfig::validate() const {
  if (rate <= 0.0) throw ValidationError("sim config: rate must be positive");
  if (theta < 1) throw ValidationError("sim config: theta must be >= 1");
  if (lifetime_hours <= 0.0) throw ValidationError("sim config: lifetime_hours must be positive");
  if (sample_step_hours <= 0.0) {
    throw ValidationError("sim config: sample_step_hours must be positive");
  }
  if (propagation.step_hours <= 0.0) {
    throw ValidationError("sim config: propagation.step_hours must be positive");
  }
  if (propagation.noise.sigma_log < 0.0) {
    throw ValidationError("sim config: propagation.noise.sigma_log must be >= 0");
  }
  if (inflection_rule == InflectionRule::kFixed && fixed_inflection_hour <= 0.0) {
    throw ValidationError("sim config: fixed_inflection_hour must be positive");
  }
  if (launch_hour < 0 || launch_hour > 23) {
    throw ValidationError("sim config: launch_hour must be in 0..23");
  }
  if (max_sales && *max_sales < 1) {
    throw ValidationError("sim config: max_sales must be >= 1");
  }
  if (seasonality) {
    double sum = 0.0;
    for (double s : *seasonality) {
      if (s < 0.0) throw ValidationError("sim config: seasonality entries must be >= 0");
      sum += s;
    }
    if (std::abs(sum / 24.0 - 1.0) > 1e-9) {
      throw ValidationError("sim config: seasonality must average 1");
    }
  }
}

namespace {

std::string deal_id_for(const SimConfig& cfg, std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-%06llu", static_cast<unsigned long long>(index));
  return cfg.id_prefix + buf;
}

// Advances the arrival clock by one exponential unit of integrated hazard.
// The rate is rate * seasonality[hour of day], piecewise constant between
// integer hours since launch. Returns the next arrival time, or > stop_time
// when no arrival happens before it.
double next_arrival(const SimConfig& cfg, RngStream& rng, double t, double stop_time) {
  if (!cfg.seasonality) {
    return t + rng.exponential(cfg.rate);
  }
  double target = rng.exponential(1.0);  // integrated hazard to consume
  while (t < stop_time) {
    const int slot = static_cast<int>(std::floor(t));
    const int hour_of_day = (cfg.launch_hour + slot) % 24;
    const double slot_rate = cfg.rate * (*cfg.seasonality)[static_cast<std::size_t>(hour_of_day)];
    const double boundary = static_cast<double>(slot) + 1.0;
    const double span = boundary - t;
    const double capacity = slot_rate * span;
    if (slot_rate > 0.0 && target <= capacity) {
      return t + target / slot_rate;
    }
    target -= capacity;
    t = boundary;
  }
  return stop_time + 1.0;  // no arrival before stop_time
}

struct DealOutcome {
  PurchaseTrace trace;
  std::optional<double> inflection;
};

DealOutcome simulate_deal_outcome(const SimConfig& cfg, std::uint64_t deal_index) {
  RngStream rng(cfg.seed, deal_index);
  const double L = cfg.lifetime_hours;

  // Phase 1: renewal arrivals until inflection, lifetime end, or sales cap.
  const bool fixed_rule = cfg.inflection_rule == InflectionRule::kFixed;
  const double renewal_stop = fixed_rule ? std::min(cfg.fixed_inflection_hour, L) : L;

  std::vector<double> arrivals;
  std::optional<double> inflection;
  double t = 0.0;
  while (true) {
    if (cfg.max_sales && static_cast<std::int64_t>(arrivals.size()) >= *cfg.max_sales) break;
    t = next_arrival(cfg, rng, t, renewal_stop);
    if (t > renewal_stop) break;
    arrivals.push_back(t);
    if (!fixed_rule && static_cast<std::int64_t>(arrivals.size()) == cfg.theta) {
      inflection = t;
      break;
    }
  }
  if (fixed_rule && cfg.fixed_inflection_hour < L) {
    inflection = cfg.fixed_inflection_hour;
  }

  // Phase 2: multiplicative growth updates at inflection + k * step_hours.
  // Internal count is fractional; reported counts are floored.
  std::vector<std::pair<double, double>> growth_states;  // (update time, count after)
  if (inflection) {
    double n_internal = static_cast<double>(arrivals.size());
    const double step = cfg.propagation.step_hours;
    for (int k = 1;; ++k) {
      const double u = *inflection + static_cast<double>(k) * step;
      if (u > L + 1e-12) break;
      if (n_internal <= 0.0) break;  // empty deal cannot propagate
      if (cfg.max_sales && n_internal >= static_cast<double>(*cfg.max_sales)) break;
      const double r = cfg.propagation.decay.value(static_cast<double>(k) * step);
      const double x = rng.lognormal(cfg.propagation.noise.mu_log,
                                     cfg.propagation.noise.sigma_log);
      n_internal *= 1.0 + r * x;
      if (cfg.max_sales) {
        n_internal = std::min(n_internal, static_cast<double>(*cfg.max_sales));
      }
      growth_states.emplace_back(u, n_internal);
    }
  }

  // Sample onto the output grid; a grid point at an event's exact time sees it.
  DealOutcome out;
  out.trace.deal_id = deal_id_for(cfg, deal_index);
  out.trace.launch_hour_of_day = cfg.launch_hour;
  out.trace.lifetime_hours = L;
  if (!fixed_rule && inflection) out.trace.tipped_at = inflection;
  out.inflection = inflection;

  const double dt = cfg.sample_step_hours;
  const auto n_grid = static_cast<std::size_t>(std::floor(L / dt + 1e-9));
  out.trace.samples.reserve(n_grid + 1);
  std::size_t arr_idx = 0;
  std::size_t upd_idx = 0;
  std::int64_t renewal_count = 0;
  for (std::size_t k = 0; k <= n_grid; ++k) {
    const double g = static_cast<double>(k) * dt;
    std::int64_t n;
    if (!inflection || g + 1e-12 < *inflection) {
      while (arr_idx < arrivals.size() && arrivals[arr_idx] <= g + 1e-12) {
        ++renewal_count;
        ++arr_idx;
      }
      n = renewal_count;
    } else {
      double state = static_cast<double>(arrivals.size());
      while (upd_idx < growth_states.size() && growth_states[upd_idx].first <= g + 1e-12) {
        ++upd_idx;
      }
      if (upd_idx > 0) state = growth_states[upd_idx - 1].second;
      n = static_cast<std::int64_t>(std::floor(state + 1e-9));
    }
    out.trace.samples.push_back({g, n});
  }
  return out;
}

}  // namespace

PurchaseTrace simulate_deal(const SimConfig& cfg, std::uint64_t deal_index) {
  cfg.validate();
  return simulate_deal_outcome(cfg, deal_index).trace;
}

SimResult simulate_cohort(const SimConfig& cfg, std::size_t n_deals, unsigned n_threads) {
  cfg.validate();
  if (n_deals == 0) throw ValidationError("simulate_cohort: n_deals must be >= 1");
  if (n_threads == 0) n_threads = 1;

  std::vector<DealOutcome> outcomes(n_deals);
  auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n_deals; i += stride) {
      outcomes[i] = simulate_deal_outcome(cfg, static_cast<std::uint64_t>(i));
    }
  };
  if (n_threads == 1 || n_deals == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      threads.emplace_back(worker, static_cast<std::size_t>(w), static_cast<std::size_t>(n_threads));
    }
    for (auto& th : threads) th.join();
  }

  SimResult result;
  result.config = cfg;
  result.dataset.provenance = "simulated";
  result.dataset.traces.reserve(n_deals);
  for (auto& oc : outcomes) {
    if (oc.inflection) {
      result.per_deal_inflection.emplace_back(oc.trace.deal_id, *oc.inflection);
    }
    result.dataset.traces.push_back(std::move(oc.trace));
  }
  return result;
}

std::vector<GrowthCurve> mean_growth_curve(const Dataset& d, double dt,
                                           bool normalize_by_launch_hour) {
  if (d.traces.empty()) throw ValidationError("mean_growth_curve: empty dataset");
  if (dt <= 0.0) throw ValidationError("mean_growth_curve: dt must be positive");

  std::map<int, std::vector<const PurchaseTrace*>> groups;
  for (const auto& tr : d.traces) {
    const int key = normalize_by_launch_hour ? tr.launch_hour_of_day : -1;
    groups[key].push_back(&tr);
  }

  std::vector<GrowthCurve> curves;
  curves.reserve(groups.size());
  for (const auto& [hour, traces] : groups) {
    double t_max = 0.0;
    for (const auto* tr : traces) {
      if (!tr->samples.empty()) t_max = std::max(t_max, tr->samples.back().t);
    }
    GrowthCurve curve;
    if (normalize_by_launch_hour) curve.launch_hour = hour;
    const auto n_grid = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
    curve.points.reserve(n_grid + 1);
    for (std::size_t k = 0; k <= n_grid; ++k) {
      const double t = static_cast<double>(k) * dt;
      double sum = 0.0;
      for (const auto* tr : traces) sum += static_cast<double>(tr->count_at(t));
      curve.points.emplace_back(t, sum / static_cast<double>(traces.size()));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

namespace {

NoveltyDecay decay_from_json(const nlohmann::json& j) {
  NoveltyDecay d;
  if (j.contains("r_table")) {
    for (const auto& row : j["r_table"]) {
      if (!row.is_array() || row.size() != 2) {
        throw ParseError("sim config: decay.r_table rows must be [t, r] pairs");
      }
      d.r_table.push_back({row[0].get<double>(), row[1].get<double>()});
    }
  }
  if (j.contains("a")) d.a = j["a"].get<double>();
  if (j.contains("b")) d.b = j["b"].get<double>();
  if (j.contains("fit_r2")) d.fit_r2 = j["fit_r2"].get<double>();
  return d;
}

nlohmann::json decay_to_json(const NoveltyDecay& d) {
  nlohmann::json j = nlohmann::json::object();
  if (!d.r_table.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : d.r_table) rows.push_back({p.t, p.r});
    j["r_table"] = std::move(rows);
  }
  if (d.a) j["a"] = *d.a;
  if (d.b) j["b"] = *d.b;
  if (d.a || d.b) j["fit_r2"] = d.fit_r2;
  return j;
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("sim config JSON: ") + e.what());
  }
  SimConfig cfg;
  try {
    if (j.contains("rate")) cfg.rate = j["rate"].get<double>();
    if (j.contains("theta")) cfg.theta = j["theta"].get<std::int64_t>();
    if (j.contains("lifetime_hours")) cfg.lifetime_hours = j["lifetime_hours"].get<double>();
    if (j.contains("sample_step_hours")) {
      cfg.sample_step_hours = j["sample_step_hours"].get<double>();
    }
    if (j.contains("inflection_rule")) {
      const std::string rule = j["inflection_rule"].get<std::string>();
      if (rule == "tipping") {
        cfg.inflection_rule = InflectionRule::kTipping;
      } else if (rule == "fixed") {
        cfg.inflection_rule = InflectionRule::kFixed;
      } else {
        throw ValidationError("sim config: inflection_rule must be 'tipping' or 'fixed'");
      }
    }
    if (j.contains("fixed_inflection_hour")) {
      cfg.fixed_inflection_hour = j["fixed_inflection_hour"].get<double>();
    }
    if (j.contains("seasonality") && !j["seasonality"].is_null()) {
      const auto& arr = j["seasonality"];
      if (!arr.is_array() || arr.size() != 24) {
        throw ValidationError("sim config: seasonality must have 24 entries");
      }
      std::array<double, 24> profile{};
      for (std::size_t i = 0; i < 24; ++i) profile[i] = arr[i].get<double>();
      cfg.seasonality = profile;
    }
    if (j.contains("launch_hour")) cfg.launch_hour = j["launch_hour"].get<int>();
    if (j.contains("max_sales") && !j["max_sales"].is_null()) {
      cfg.max_sales = j["max_sales"].get<std::int64_t>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("id_prefix")) cfg.id_prefix = j["id_prefix"].get<std::string>();
    if (j.contains("propagation")) {
      const auto& p = j["propagation"];
      if (p.contains("decay")) cfg.propagation.decay = decay_from_json(p["decay"]);
      if (p.contains("noise")) {
        cfg.propagation.noise.mu_log = p["noise"].value("mu_log", 0.0);
        cfg.propagation.noise.sigma_log = p["noise"].value("sigma_log", 0.0);
      }
      if (p.contains("step_hours")) cfg.propagation.step_hours = p["step_hours"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sim config: bad field type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string serialize_sim_config(const SimConfig& cfg) {
  nlohmann::json j;
  j["rate"] = cfg.rate;
  j["theta"] = cfg.theta;
  j["lifetime_hours"] = cfg.lifetime_hours;
  j["sample_step_hours"] = cfg.sample_step_hours;
  j["inflection_rule"] = cfg.inflection_rule == InflectionRule::kTipping ? "tipping" : "fixed";
  if (cfg.inflection_rule == InflectionRule::kFixed) {
    j["fixed_inflection_hour"] = cfg.fixed_inflection_hour;
  }
  if (cfg.seasonality) {
    nlohmann::json arr = nlohmann::json::array();
    for (double s : *cfg.seasonality) arr.push_back(s);
    j["seasonality"] = std::move(arr);
  }
  j["launch_hour"] = cfg.launch_hour;
  if (cfg.max_sales) j["max_sales"] = *cfg.max_sales;
  j["seed"] = cfg.seed;
  j["id_prefix"] = cfg.id_prefix;
  nlohmann::json prop;
  prop["decay"] = decay_to_json(cfg.propagation.decay);
  prop["noise"] = {{"mu_log", cfg.propagation.noise.mu_log},
                   {"sigma_log", cfg.propagation.noise.sigma_log}};
  prop["step_hours"] = cfg.propagation.step_hours;
  j["propagation"] = std::move(prop);
  return j.dump(2) + "\n";
}

}  // namespace dealflow
