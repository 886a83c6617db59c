#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dealflow/trace.hpp"

namespace dealflow {

// Shortest decimal string that round-trips to the same double (to_chars).
// All numeric file output goes through this so that outputs are
// byte-deterministic and parse back exactly.
std::string format_double(double v);

// Trace CSV: header `deal_id,hours_since_launch,cumulative_purchases`,
// decimal hours, LF line endings. One trace per distinct deal_id, in order of
// first appearance; samples sorted by time. A parsed trace's lifetime is the
// last sample time until attributes supply a duration.
//
// Throws ParseError (malformed row, with line number) or ValidationError
// (negative values, duplicate (deal_id, t)).
Dataset parse_trace_csv(const std::string& content);
std::string serialize_trace_csv(const Dataset& d);

// Attributes JSON: array of objects with keys deal_id, tipping_point,
// featured, duration_hours, limited, price, discount_pct, launch_day,
// category, city. Unknown keys are ignored; missing keys take defaults.
std::vector<std::pair<std::string, DealAttributes>> parse_attributes_json(
    const std::string& content);
std::string serialize_attributes_json(
    const std::vector<std::pair<std::string, DealAttributes>>& attrs);

// Joins attributes onto traces by deal_id. A trace gaining attributes also
// gains lifetime_hours = duration_hours and tipped_at = first time its count
// reached the tipping point. Attribute entries without a matching trace are
// ignored.
void attach_attributes(Dataset& d,
                       const std::vector<std::pair<std::string, DealAttributes>>& attrs);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dealflow
