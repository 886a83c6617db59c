#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "dealflow/errors.hpp"
#include "dealflow/rng.hpp"
#include "dealflow/trace.hpp"
#include "dealflow/trace_io.hpp"

using dealflow::Dataset;
using dealflow::DealAttributes;
using dealflow::ParseError;
using dealflow::PurchaseTrace;
using dealflow::TraceSample;
using dealflow::ValidationError;
using doctest::Approx;

namespace {

PurchaseTrace make_trace(std::string id, std::vector<TraceSample> samples,
                         double lifetime = 24.0) {
  PurchaseTrace tr;
  tr.deal_id = std::move(id);
  tr.samples = std::move(samples);
  tr.lifetime_hours = lifetime;
  return tr;
}

}  // namespace

TEST_CASE("count_at carries the last observation forward") {
  const auto tr = make_trace("d", {{0.5, 3}, {2.0, 7}});
  CHECK(tr.count_at(0.0) == 0);
  CHECK(tr.count_at(0.4999) == 0);
  CHECK(tr.count_at(0.5) == 3);
  CHECK(tr.count_at(1.9) == 3);
  CHECK(tr.count_at(2.0) == 7);
  CHECK(tr.count_at(100.0) == 7);
  CHECK(tr.final_count() == 7);
  CHECK(make_trace("e", {}).final_count() == 0);
}

TEST_CASE("clean_dataset drops large decreases and repairs small ones") {
  Dataset d;
  d.traces.push_back(make_trace("drop", {{1, 5}, {2, 20}, {3, 8}}));    // -12
  d.traces.push_back(make_trace("repair", {{1, 5}, {2, 20}, {3, 18}})); // -2
  d.traces.push_back(make_trace("ok", {{1, 1}, {2, 2}}));

  const auto [cleaned, report] = dealflow::clean_dataset(d, 10);
  CHECK(report.dropped == 1);
  CHECK(report.kept == 2);
  REQUIRE(report.dropped_ids.size() == 1);
  CHECK(report.dropped_ids[0] == "drop");
  CHECK(report.threshold == 10);

  REQUIRE(cleaned.traces.size() == 2);
  CHECK(cleaned.traces[0].deal_id == "repair");
  CHECK(cleaned.traces[0].samples[2].n == 20);  // clamped to running max
  CHECK(cleaned.traces[1].deal_id == "ok");

  const auto [empty_out, empty_report] = dealflow::clean_dataset(Dataset{}, 10);
  CHECK(empty_out.traces.empty());
  CHECK(empty_report.kept == 0);
  CHECK_THROWS_AS(dealflow::clean_dataset(d, 0), ValidationError);
}

TEST_CASE("clean_dataset output is always non-decreasing (randomized)") {
  dealflow::RngStream rng(201, 0);
  for (int iter = 0; iter < 100; ++iter) {
    Dataset d;
    const std::int64_t threshold = 1 + static_cast<std::int64_t>(rng.uniform_below(20));
    for (int k = 0; k < 8; ++k) {
      PurchaseTrace tr;
      tr.deal_id = "t" + std::to_string(k);
      std::int64_t n = 0;
      double t = 0.0;
      for (int s = 0; s < 20; ++s) {
        t += 0.1 + rng.uniform01();
        n += static_cast<std::int64_t>(rng.uniform_below(7)) - 2;  // may decrease
        if (n < 0) n = 0;
        tr.samples.push_back({t, n});
      }
      d.traces.push_back(std::move(tr));
    }
    const auto [cleaned, report] = dealflow::clean_dataset(d, threshold);
    CHECK(report.kept + report.dropped == d.traces.size());
    for (const auto& tr : cleaned.traces) {
      for (std::size_t i = 1; i < tr.samples.size(); ++i) {
        CHECK(tr.samples[i].n >= tr.samples[i - 1].n);
      }
    }
  }
}

TEST_CASE("resample_trace aligns onto the grid with carry-forward") {
  const auto tr = make_trace("d", {{0.1, 2}, {0.5, 7}});
  const auto out = dealflow::resample_trace(tr, 1.0 / 3.0);
  REQUIRE(out.samples.size() == 3);
  CHECK(out.samples[0].t == 0.0);
  CHECK(out.samples[0].n == 0);
  CHECK(out.samples[1].t == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(out.samples[1].n == 2);
  CHECK(out.samples[2].t == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(out.samples[2].n == 7);
}

TEST_CASE("resample_trace puts a 24h trace on 73 grid points at 20 minutes") {
  const auto tr = make_trace("d", {{0.0, 0}, {24.0, 10}});
  const auto out = dealflow::resample_trace(tr, 1.0 / 3.0);
  CHECK(out.samples.size() == 73);
  CHECK(out.samples.back().t == Approx(24.0).epsilon(1e-12));
  CHECK(out.samples.back().n == 10);
}

TEST_CASE("resample_trace is idempotent and truncates at the lifetime") {
  dealflow::RngStream rng(202, 0);
  for (int iter = 0; iter < 50; ++iter) {
    PurchaseTrace tr;
    tr.deal_id = "r";
    tr.lifetime_hours = 6.0;
    double t = 0.0;
    std::int64_t n = 0;
    for (int s = 0; s < 30; ++s) {
      t += rng.uniform01() * 0.6;
      n += static_cast<std::int64_t>(rng.uniform_below(4));
      tr.samples.push_back({t, n});
    }
    const double dt = 0.25 + rng.uniform01() * 0.5;
    const auto once = dealflow::resample_trace(tr, dt);
    const auto twice = dealflow::resample_trace(once, dt);
    REQUIRE(once.samples.size() == twice.samples.size());
    for (std::size_t i = 0; i < once.samples.size(); ++i) {
      CHECK(once.samples[i].t == twice.samples[i].t);
      CHECK(once.samples[i].n == twice.samples[i].n);
    }
    CHECK(once.samples.back().t <= std::min(tr.lifetime_hours, tr.samples.back().t) + dt);
  }
  CHECK_THROWS_AS(dealflow::resample_trace(make_trace("x", {}), 1.0), ValidationError);
  CHECK_THROWS_AS(dealflow::resample_trace(make_trace("x", {{1, 1}}), 0.0), ValidationError);
}

TEST_CASE("interarrival_times spreads arrivals uniformly within intervals") {
  const auto one_per_hour = make_trace("d", {{0, 0}, {1, 1}, {2, 2}});
  const auto gaps1 = dealflow::interarrival_times(one_per_hour);
  REQUIRE(gaps1.size() == 2);
  CHECK(gaps1[0] == Approx(0.5).epsilon(1e-12));
  CHECK(gaps1[1] == Approx(1.0).epsilon(1e-12));

  const auto two_in_one = make_trace("d", {{0, 0}, {1, 2}});
  const auto gaps2 = dealflow::interarrival_times(two_in_one);
  REQUIRE(gaps2.size() == 2);
  CHECK(gaps2[0] == Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(gaps2[1] == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("interarrival_times preserves counts and total span (randomized)") {
  dealflow::RngStream rng(203, 0);
  for (int iter = 0; iter < 100; ++iter) {
    PurchaseTrace tr;
    tr.deal_id = "r";
    double t = 0.0;
    std::int64_t n = 0;
    for (int s = 0; s < 25; ++s) {
      t += 0.05 + rng.uniform01();
      n += static_cast<std::int64_t>(rng.uniform_below(5));
      tr.samples.push_back({t, n});
    }
    const auto gaps = dealflow::interarrival_times(tr);
    CHECK(gaps.size() == static_cast<std::size_t>(tr.final_count()));
    double total = 0.0;
    for (double g : gaps) {
      CHECK(g > 0.0);
      total += g;
    }
    // Sum of gaps is the last arrival time, which lies inside the trace span.
    CHECK(total <= tr.samples.back().t + 1e-9);
  }
  CHECK(dealflow::interarrival_times(make_trace("z", {{0, 0}, {5, 0}})).empty());
  CHECK_THROWS_AS(dealflow::interarrival_times(make_trace("bad", {{0, 3}, {1, 1}})),
                  ValidationError);
}

TEST_CASE("interarrival reconstruction recovers a Poisson rate from 20-minute samples") {
  // Oracle route: arrivals drawn directly as an Exponential(2/h) renewal
  // process, then collapsed to cumulative counts on the 20-minute grid the
  // way a crawler would observe them.
  dealflow::RngStream rng(204, 0);
  PurchaseTrace tr;
  tr.deal_id = "poisson";
  tr.lifetime_hours = 4000.0;
  std::vector<double> arrivals;
  double t = 0.0;
  while (true) {
    t += rng.exponential(2.0);
    if (t > 4000.0) break;
    arrivals.push_back(t);
  }
  std::size_t idx = 0;
  std::int64_t n = 0;
  for (double g = 0.0; g <= 4000.0; g += 1.0 / 3.0) {
    while (idx < arrivals.size() && arrivals[idx] <= g) {
      ++n;
      ++idx;
    }
    tr.samples.push_back({g, n});
  }
  const auto gaps = dealflow::interarrival_times(tr);
  REQUIRE(gaps.size() > 1000);
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  CHECK(mean == Approx(0.5).epsilon(0.05));
}

TEST_CASE("align_at_inflection rebases times and drops the prefix") {
  auto tr = make_trace("d", {{0, 0}, {1, 3}, {2, 5}, {3.5, 9}}, 24.0);
  tr.tipped_at = 2.0;
  const auto aligned = dealflow::align_at_inflection(tr, 2.0);
  REQUIRE(aligned.samples.size() == 2);
  CHECK(aligned.samples[0].t == Approx(0.0));
  CHECK(aligned.samples[0].n == 5);
  CHECK(aligned.samples[1].t == Approx(1.5));
  CHECK(aligned.samples[1].n == 9);
  CHECK(aligned.lifetime_hours == Approx(22.0));
  REQUIRE(aligned.tipped_at.has_value());
  CHECK(*aligned.tipped_at == Approx(0.0));
}

TEST_CASE("first_time_reaching finds the first threshold crossing") {
  const auto tr = make_trace("d", {{1, 2}, {2, 5}, {3, 5}, {4, 9}});
  auto hit = dealflow::first_time_reaching(tr, 5);
  REQUIRE(hit.has_value());
  CHECK(*hit == Approx(2.0));
  CHECK_FALSE(dealflow::first_time_reaching(tr, 10).has_value());
}

// ---------------------------------------------------------------------------
// trace CSV / attributes JSON
// ---------------------------------------------------------------------------

TEST_CASE("trace CSV round-trips byte-for-byte") {
  const std::string csv =
      "deal_id,hours_since_launch,cumulative_purchases\n"
      "a,0,0\n"
      "a,0.3333333333333333,2\n"
      "a,24,17\n"
      "b,1.5,4\n";
  const Dataset d = dealflow::parse_trace_csv(csv);
  REQUIRE(d.traces.size() == 2);
  CHECK(d.traces[0].deal_id == "a");
  CHECK(d.traces[0].samples.size() == 3);
  CHECK(d.traces[0].lifetime_hours == Approx(24.0));
  CHECK(d.traces[1].lifetime_hours == Approx(1.5));
  CHECK(dealflow::serialize_trace_csv(d) == csv);
}

TEST_CASE("trace CSV parser sorts samples and tolerates blank lines and CRLF") {
  const std::string csv =
      "deal_id,hours_since_launch,cumulative_purchases\r\n"
      "a,2,5\r\n"
      "\r\n"
      "a,1,3\r\n";
  const Dataset d = dealflow::parse_trace_csv(csv);
  REQUIRE(d.traces.size() == 1);
  REQUIRE(d.traces[0].samples.size() == 2);
  CHECK(d.traces[0].samples[0].t == Approx(1.0));
  CHECK(d.traces[0].samples[1].t == Approx(2.0));
}

TEST_CASE("trace CSV parser reports malformed input with line numbers") {
  const std::string header = "deal_id,hours_since_launch,cumulative_purchases\n";
  CHECK_THROWS_AS(dealflow::parse_trace_csv(""), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv("wrong,header,here\n"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,1\n"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,1,2,3\n"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,abc,2\n"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,1,2.5\n"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + ",1,2\n"), ParseError);
  try {
    dealflow::parse_trace_csv(header + "a,1,2\na,bad,3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,-1,2\n"), ValidationError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,1,-2\n"), ValidationError);
  CHECK_THROWS_AS(dealflow::parse_trace_csv(header + "a,1,2\na,1,3\n"), ValidationError);
}

TEST_CASE("format_double emits the shortest exact representation") {
  CHECK(dealflow::format_double(2.0) == "2");
  CHECK(dealflow::format_double(0.1) == "0.1");
  CHECK(dealflow::format_double(1.0 / 3.0) == "0.3333333333333333");
  dealflow::RngStream rng(205, 0);
  for (int i = 0; i < 200; ++i) {
    const double v = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform01() * 20 - 10);
    const std::string s = dealflow::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);  // exact round trip
  }
}

TEST_CASE("attributes JSON round-trips and validates fields") {
  std::vector<std::pair<std::string, DealAttributes>> attrs;
  DealAttributes a;
  a.tipping_point = 22;
  a.featured = true;
  a.duration_hours = 48;
  a.limited = true;
  a.price = 19.5;
  a.discount_pct = 55;
  a.launch_day = "mon";
  a.category = "food";
  a.city = "boston";
  attrs.emplace_back("deal-1", a);

  const std::string json = dealflow::serialize_attributes_json(attrs);
  const auto parsed = dealflow::parse_attributes_json(json);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].first == "deal-1");
  CHECK(parsed[0].second == a);

  // Unknown keys ignored; missing keys default.
  const auto defaults = dealflow::parse_attributes_json(
      R"([{"deal_id": "x", "mystery_key": 3}])");
  REQUIRE(defaults.size() == 1);
  CHECK(defaults[0].second.tipping_point == 1);
  CHECK(defaults[0].second.duration_hours == Approx(24.0));

  CHECK_THROWS_AS(dealflow::parse_attributes_json("not json"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"({"deal_id": "x"})"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"([{"price": 3}])"), ParseError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"([{"deal_id":"x","tipping_point":0}])"),
                  ValidationError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"([{"deal_id":"x","duration_hours":0}])"),
                  ValidationError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"([{"deal_id":"x","price":-1}])"),
                  ValidationError);
  CHECK_THROWS_AS(dealflow::parse_attributes_json(R"([{"deal_id":"x","discount_pct":101}])"),
                  ValidationError);
}

TEST_CASE("attach_attributes joins by id and derives lifetime and tipping time") {
  Dataset d;
  d.traces.push_back(make_trace("a", {{1, 2}, {2, 6}, {3, 9}}, 3.0));
  d.traces.push_back(make_trace("b", {{1, 1}}, 1.0));

  DealAttributes a;
  a.tipping_point = 5;
  a.duration_hours = 36.0;
  dealflow::attach_attributes(d, {{"a", a}, {"missing", a}});

  REQUIRE(d.traces[0].attributes.has_value());
  CHECK(d.traces[0].lifetime_hours == Approx(36.0));
  REQUIRE(d.traces[0].tipped_at.has_value());
  CHECK(*d.traces[0].tipped_at == Approx(2.0));  // first sample with n >= 5
  CHECK_FALSE(d.traces[1].attributes.has_value());
}
