#include "dealflow/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "dealflow/errors.hpp"
#include "dealflow/stats.hpp"

namespace dealflow {

namespace {

std::int64_t round_count(double v) {
  if (v < 0.0) return 0;
  return static_cast<std::int64_t>(std::llround(v));
}

}  // namespace

std::int64_t predict_baseline1(std::int64_t n_t1) { return n_t1; }

Baseline2Params train_baseline2(std::span<const std::pair<double, double>> pairs) {
  std::vector<double> x, y;
  x.reserve(pairs.size());
  y.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    x.push_back(a);
    y.push_back(b);
  }
  const LinearFit f = fit_line(x, y);
  return {f.slope, f.intercept};
}

std::int64_t predict_baseline2(const Baseline2Params& p, std::int64_t n_t1) {
  return round_count(p.slope * static_cast<double>(n_t1) + p.intercept);
}

CategoricalEncoder build_encoder(const Dataset& ds) {
  std::set<std::string> days, cats, cities;
  for (const auto& tr : ds.traces) {
    if (!tr.attributes) continue;
    if (!tr.attributes->launch_day.empty()) days.insert(tr.attributes->launch_day);
    if (!tr.attributes->category.empty()) cats.insert(tr.attributes->category);
    if (!tr.attributes->city.empty()) cities.insert(tr.attributes->city);
  }
  CategoricalEncoder enc;
  enc.launch_days.assign(days.begin(), days.end());
  enc.categories.assign(cats.begin(), cats.end());
  enc.cities.assign(cities.begin(), cities.end());
  return enc;
}

namespace {

void append_one_hot(std::vector<double>& features, const std::vector<std::string>& vocab,
                    const std::string& label) {
  const std::size_t base = features.size();
  features.resize(base + vocab.size(), 0.0);
  const auto it = std::lower_bound(vocab.begin(), vocab.end(), label);
  if (it != vocab.end() && *it == label) {
    features[base + static_cast<std::size_t>(it - vocab.begin())] = 1.0;
  }
}

}  // namespace

std::vector<double> encode_attributes(const DealAttributes& a,
                                      const CategoricalEncoder& enc) {
  if (a.tipping_point < 1) {
    throw ValidationError("encode_attributes: tipping_point must be >= 1");
  }
  std::vector<double> f;
  f.reserve(enc.feature_count());
  f.push_back(1.0);
  f.push_back(std::log(static_cast<double>(a.tipping_point)));
  f.push_back(a.featured ? 1.0 : 0.0);
  f.push_back(a.duration_hours);
  f.push_back(a.limited ? 1.0 : 0.0);
  f.push_back(a.price);
  f.push_back(a.discount_pct);
  append_one_hot(f, enc.launch_days, a.launch_day);
  append_one_hot(f, enc.categories, a.category);
  append_one_hot(f, enc.cities, a.city);
  return f;
}

MlrModel train_mlr(const Dataset& ds, std::optional<double> target_hour) {
  std::vector<const PurchaseTrace*> rows;
  std::vector<double> targets;
  for (const auto& tr : ds.traces) {
    if (!tr.attributes) continue;
    const std::int64_t n = target_hour ? tr.count_at(*target_hour) : tr.final_count();
    if (n < 1) continue;  // log undefined
    rows.push_back(&tr);
    targets.push_back(std::log(static_cast<double>(n)));
  }
  if (rows.size() < 2) {
    throw ValidationError("train_mlr: need at least 2 rows with attributes and positive counts");
  }

  MlrModel model;
  Dataset with_attrs;
  for (const auto* tr : rows) with_attrs.traces.push_back(*tr);
  model.encoder = build_encoder(with_attrs);
  const std::size_t k = model.encoder.feature_count();
  const std::size_t n = rows.size();

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = encode_attributes(*rows[i]->attributes, model.encoder);
    for (std::size_t j = 0; j < k; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
    y(static_cast<Eigen::Index>(i)) = targets[i];
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& singular = svd.singularValues();
  const double cutoff = singular.size() > 0 ? singular(0) * 1e-10 : 0.0;

  // Minimum-norm least squares: beta = V * diag(1/sigma_i or 0) * U^T y.
  Eigen::VectorXd inv_sigma = Eigen::VectorXd::Zero(singular.size());
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < singular.size(); ++i) {
    if (singular(i) > cutoff) {
      inv_sigma(i) = 1.0 / singular(i);
      ++rank;
    }
  }
  const Eigen::VectorXd beta =
      svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose() * y;

  model.rank = rank;
  model.collinear = rank < k;
  model.n_rows = n;
  model.coefficients.assign(beta.data(), beta.data() + beta.size());

  const Eigen::VectorXd residuals = y - x * beta;
  const double ss_res = residuals.squaredNorm();
  const double y_mean = y.mean();
  const double ss_tot = (y.array() - y_mean).square().sum();
  model.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  // Diagnostics from the pseudo-inverse of X'X = V diag(1/sigma^2) V'.
  const double dof = static_cast<double>(n) - static_cast<double>(rank);
  const double sigma2 = dof > 0.0 ? ss_res / dof : 0.0;
  model.standard_errors.resize(k, 0.0);
  model.t_values.resize(k, 0.0);
  model.p_values.resize(k, 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    double var_j = 0.0;
    for (Eigen::Index i = 0; i < singular.size(); ++i) {
      const double vji = svd.matrixV()(static_cast<Eigen::Index>(j), i);
      var_j += vji * vji * inv_sigma(i) * inv_sigma(i);
    }
    const double se = std::sqrt(sigma2 * var_j);
    model.standard_errors[j] = se;
    if (se > 0.0 && dof > 0.0) {
      model.t_values[j] = model.coefficients[j] / se;
      model.p_values[j] = student_t_two_sided_p(model.t_values[j], dof);
    }
  }
  return model;
}

std::int64_t predict_mlr(const MlrModel& m, const DealAttributes& a) {
  const auto f = encode_attributes(a, m.encoder);
  double dot = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) dot += f[j] * m.coefficients[j];
  return round_count(std::exp(dot));
}

const SpEntry* SpModel::find(double t1, double t2) const {
  for (const auto& e : entries) {
    if (std::abs(e.t1 - t1) < 1e-9 && std::abs(e.t2 - t2) < 1e-9) return &e;
  }
  return nullptr;
}

SpEntry train_sp(const Dataset& ds, double t1, double t2) {
  if (!(t1 < t2)) throw ValidationError("train_sp: t1 must be < t2");
  std::vector<double> x, y;
  std::size_t excluded = 0;
  for (const auto& tr : ds.traces) {
    const std::int64_t n1 = tr.count_at(t1);
    const std::int64_t n2 = tr.count_at(t2);
    if (n1 < 1 || n2 < 1) {
      ++excluded;
      continue;
    }
    x.push_back(std::log(static_cast<double>(n1)));
    y.push_back(std::log(static_cast<double>(n2)));
  }
  if (x.size() < 2) {
    throw InsufficientDataError("train_sp: fewer than 2 traces with positive counts at t1=" +
                                std::to_string(t1) + " and t2=" + std::to_string(t2));
  }
  const LinearFit f = fit_line(x, y);
  SpEntry e;
  e.t1 = t1;
  e.t2 = t2;
  e.slope = f.slope;
  e.intercept = f.intercept;
  e.r2 = f.r2;
  e.n_used = x.size();
  e.n_excluded = excluded;
  return e;
}

std::int64_t predict_sp(const SpModel& m, std::int64_t n_t1, double t1, double t2) {
  const SpEntry* e = m.find(t1, t2);
  if (e == nullptr) {
    throw ValidationError("predict_sp: no trained entry for t1=" + std::to_string(t1) +
                          ", t2=" + std::to_string(t2));
  }
  if (n_t1 <= 0) return predict_baseline1(0);  // log undefined; fall back
  const double log_pred = e->slope * std::log(static_cast<double>(n_t1)) + e->intercept;
  return round_count(std::exp(log_pred));
}

std::int64_t predict_hybrid(const HybridPolicy& policy, const PurchaseTrace& prefix,
                            double t1, double t2, const SpModel& sp) {
  const std::int64_t n_t1 = prefix.count_at(t1);
  if (policy.mode == HybridMode::kLivingsocial) {
    if (t1 < policy.cutoff_hours) return predict_baseline1(n_t1);
    return predict_sp(sp, n_t1, t1, t2);
  }
  // groupon mode
  if (prefix.count_at(1.0) > policy.popularity_override) {
    return predict_baseline1(n_t1);
  }
  std::optional<double> tipped = prefix.tipped_at;
  if (!tipped) {
    if (!prefix.attributes) {
      throw ValidationError("predict_hybrid: groupon mode needs the deal's tipping point");
    }
    tipped = first_time_reaching(prefix, prefix.attributes->tipping_point);
  }
  if (!tipped || *tipped > t1) return predict_baseline1(n_t1);
  return predict_sp(sp, n_t1, t1, t2);
}

const Baseline2Params* ModelBundle::find_b2(double t1) const {
  for (const auto& [key, params] : b2) {
    if (std::abs(key - t1) < 1e-9) return &params;
  }
  return nullptr;
}

namespace {

nlohmann::json encoder_to_json(const CategoricalEncoder& e) {
  return {{"launch_days", e.launch_days},
          {"categories", e.categories},
          {"cities", e.cities}};
}

CategoricalEncoder encoder_from_json(const nlohmann::json& j) {
  CategoricalEncoder e;
  e.launch_days = j.value("launch_days", std::vector<std::string>{});
  e.categories = j.value("categories", std::vector<std::string>{});
  e.cities = j.value("cities", std::vector<std::string>{});
  return e;
}

}  // namespace

std::string serialize_models(const ModelBundle& b) {
  nlohmann::json j;
  j["t2"] = b.t2;
  nlohmann::json b2 = nlohmann::json::array();
  for (const auto& [t1, p] : b.b2) {
    b2.push_back({{"t1", t1}, {"slope", p.slope}, {"intercept", p.intercept}});
  }
  j["baseline2"] = std::move(b2);
  nlohmann::json sp = nlohmann::json::array();
  for (const auto& e : b.sp.entries) {
    sp.push_back({{"t1", e.t1},
                  {"t2", e.t2},
                  {"slope", e.slope},
                  {"intercept", e.intercept},
                  {"r2", e.r2},
                  {"n_used", e.n_used},
                  {"n_excluded", e.n_excluded}});
  }
  j["sp"] = std::move(sp);
  if (b.mlr) {
    nlohmann::json m;
    m["encoder"] = encoder_to_json(b.mlr->encoder);
    m["coefficients"] = b.mlr->coefficients;
    m["standard_errors"] = b.mlr->standard_errors;
    m["t_values"] = b.mlr->t_values;
    m["p_values"] = b.mlr->p_values;
    m["r2"] = b.mlr->r2;
    m["rank"] = b.mlr->rank;
    m["collinear"] = b.mlr->collinear;
    m["n_rows"] = b.mlr->n_rows;
    j["mlr"] = std::move(m);
  }
  return j.dump(2) + "\n";
}

ModelBundle parse_models(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("models JSON: ") + e.what());
  }
  ModelBundle b;
  try {
    b.t2 = j.value("t2", 24.0);
    if (j.contains("baseline2")) {
      for (const auto& e : j["baseline2"]) {
        b.b2.emplace_back(e["t1"].get<double>(),
                          Baseline2Params{e["slope"].get<double>(),
                                          e["intercept"].get<double>()});
      }
    }
    if (j.contains("sp")) {
      for (const auto& e : j["sp"]) {
        SpEntry s;
        s.t1 = e["t1"].get<double>();
        s.t2 = e["t2"].get<double>();
        s.slope = e["slope"].get<double>();
        s.intercept = e["intercept"].get<double>();
        s.r2 = e.value("r2", 0.0);
        s.n_used = e.value("n_used", std::size_t{0});
        s.n_excluded = e.value("n_excluded", std::size_t{0});
        b.sp.entries.push_back(s);
      }
    }
    if (j.contains("mlr")) {
      const auto& m = j["mlr"];
      MlrModel model;
      model.encoder = encoder_from_json(m["encoder"]);
      model.coefficients = m["coefficients"].get<std::vector<double>>();
      model.standard_errors = m.value("standard_errors", std::vector<double>{});
      model.t_values = m.value("t_values", std::vector<double>{});
      model.p_values = m.value("p_values", std::vector<double>{});
      model.r2 = m.value("r2", 0.0);
      model.rank = m.value("rank", std::size_t{0});
      model.collinear = m.value("collinear", false);
      model.n_rows = m.value("n_rows", std::size_t{0});
      if (model.coefficients.size() != model.encoder.feature_count()) {
        throw ValidationError("models JSON: mlr coefficient count does not match encoder");
      }
      b.mlr = std::move(model);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("models JSON: bad field: ") + e.what());
  }
  return b;
}

}  // namespace dealflow
