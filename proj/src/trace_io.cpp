#include "dealflow/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "dealflow/errors.hpp"

namespace dealflow {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ValidationError("format_double: value not representable");
  return std::string(buf, ptr);
}

namespace {

constexpr std::string_view kTraceHeader = "deal_id,hours_since_launch,cumulative_purchases";

double parse_double_field(std::string_view field, long line, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(std::string("bad ") + what + " value '" + std::string(field) + "'", line);
  }
  return v;
}

std::int64_t parse_int_field(std::string_view field, long line, const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(std::string("bad ") + what + " value '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace

Dataset parse_trace_csv(const std::string& content) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> index_of;
  std::set<std::pair<std::string, double>> seen_times;

  std::size_t pos = 0;
  long line_no = 0;
  bool header_seen = false;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > content.size()) break;  // trailing newline
      continue;
    }
    if (!header_seen) {
      if (line != kTraceHeader) {
        throw ParseError("expected header '" + std::string(kTraceHeader) + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? std::string_view::npos
                                                        : line.find(',', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
        line.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError("expected 3 comma-separated fields", line_no);
    }
    std::string id(line.substr(0, c1));
    if (id.empty()) throw ParseError("empty deal_id", line_no);
    const double t = parse_double_field(line.substr(c1 + 1, c2 - c1 - 1), line_no,
                                        "hours_since_launch");
    const std::int64_t n = parse_int_field(line.substr(c2 + 1), line_no,
                                           "cumulative_purchases");
    if (t < 0.0) {
      throw ValidationError("negative hours_since_launch (line " +
                            std::to_string(line_no) + ")");
    }
    if (n < 0) {
      throw ValidationError("negative cumulative_purchases (line " +
                            std::to_string(line_no) + ")");
    }
    if (!seen_times.emplace(id, t).second) {
      throw ValidationError("duplicate sample time for deal '" + id + "' (line " +
                            std::to_string(line_no) + ")");
    }
    auto [it, inserted] = index_of.try_emplace(id, ds.traces.size());
    if (inserted) {
      PurchaseTrace tr;
      tr.deal_id = id;
      ds.traces.push_back(std::move(tr));
    }
    ds.traces[it->second].samples.push_back({t, n});
  }
  if (!header_seen) throw ParseError("empty input: missing header", 1);

  for (auto& tr : ds.traces) {
    std::sort(tr.samples.begin(), tr.samples.end(),
              [](const TraceSample& a, const TraceSample& b) { return a.t < b.t; });
    if (!tr.samples.empty()) tr.lifetime_hours = tr.samples.back().t;
  }
  return ds;
}

std::string serialize_trace_csv(const Dataset& d) {
  std::string out(kTraceHeader);
  out.push_back('\n');
  for (const auto& tr : d.traces) {
    for (const auto& s : tr.samples) {
      out += tr.deal_id;
      out.push_back(',');
      out += format_double(s.t);
      out.push_back(',');
      out += std::to_string(s.n);
      out.push_back('\n');
    }
  }
  return out;
}

std::vector<std::pair<std::string, DealAttributes>> parse_attributes_json(
    const std::string& content) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("attributes JSON: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("attributes JSON: expected top-level array");

  std::vector<std::pair<std::string, DealAttributes>> out;
  out.reserve(j.size());
  for (const auto& obj : j) {
    if (!obj.is_object()) throw ParseError("attributes JSON: expected array of objects");
    if (!obj.contains("deal_id") || !obj["deal_id"].is_string()) {
      throw ParseError("attributes JSON: entry missing string deal_id");
    }
    DealAttributes a;
    const std::string id = obj["deal_id"].get<std::string>();
    try {
      if (obj.contains("tipping_point")) a.tipping_point = obj["tipping_point"].get<std::int64_t>();
      if (obj.contains("featured")) a.featured = obj["featured"].get<bool>();
      if (obj.contains("duration_hours")) a.duration_hours = obj["duration_hours"].get<double>();
      if (obj.contains("limited")) a.limited = obj["limited"].get<bool>();
      if (obj.contains("price")) a.price = obj["price"].get<double>();
      if (obj.contains("discount_pct")) a.discount_pct = obj["discount_pct"].get<double>();
      if (obj.contains("launch_day")) a.launch_day = obj["launch_day"].get<std::string>();
      if (obj.contains("category")) a.category = obj["category"].get<std::string>();
      if (obj.contains("city")) a.city = obj["city"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("attributes JSON: bad field type for deal '" + id + "': " + e.what());
    }
    if (a.tipping_point < 1) {
      throw ValidationError("attributes: tipping_point must be >= 1 (deal '" + id + "')");
    }
    if (a.duration_hours <= 0.0) {
      throw ValidationError("attributes: duration_hours must be positive (deal '" + id + "')");
    }
    if (a.price < 0.0) {
      throw ValidationError("attributes: price must be non-negative (deal '" + id + "')");
    }
    if (a.discount_pct < 0.0 || a.discount_pct > 100.0) {
      throw ValidationError("attributes: discount_pct must be in [0, 100] (deal '" + id + "')");
    }
    out.emplace_back(id, std::move(a));
  }
  return out;
}

std::string serialize_attributes_json(
    const std::vector<std::pair<std::string, DealAttributes>>& attrs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, a] : attrs) {
    nlohmann::json o;
    o["deal_id"] = id;
    o["tipping_point"] = a.tipping_point;
    o["featured"] = a.featured;
    o["duration_hours"] = a.duration_hours;
    o["limited"] = a.limited;
    o["price"] = a.price;
    o["discount_pct"] = a.discount_pct;
    o["launch_day"] = a.launch_day;
    o["category"] = a.category;
    o["city"] = a.city;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

void attach_attributes(Dataset& d,
                       const std::vector<std::pair<std::string, DealAttributes>>& attrs) {
  std::unordered_map<std::string, const DealAttributes*> by_id;
  for (const auto& [id, a] : attrs) by_id[id] = &a;
  for (auto& tr : d.traces) {
    auto it = by_id.find(tr.deal_id);
    if (it == by_id.end()) continue;
    tr.attributes = *it->second;
    tr.lifetime_hours = it->second->duration_hours;
    tr.tipped_at = first_time_reaching(tr, it->second->tipping_point);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace dealflow
