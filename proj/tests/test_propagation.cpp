#include <doctest.h>

#include <cmath>
#include <vector>

#include "dealflow/errors.hpp"
#include "dealflow/propagation.hpp"
#include "dealflow/trace.hpp"

using dealflow::Dataset;
using dealflow::InsufficientDataError;
using dealflow::NoveltyDecay;
using dealflow::PurchaseTrace;
using dealflow::ValidationError;
using doctest::Approx;

namespace {

PurchaseTrace counts_at_hours(std::string id, const std::vector<std::int64_t>& counts) {
  PurchaseTrace tr;
  tr.deal_id = std::move(id);
  tr.lifetime_hours = static_cast<double>(counts.size() - 1);
  for (std::size_t h = 0; h < counts.size(); ++h) {
    tr.samples.push_back({static_cast<double>(h), counts[h]});
  }
  return tr;
}

NoveltyDecay table_decay(std::vector<dealflow::DecayPoint> rows) {
  NoveltyDecay d;
  d.r_table = std::move(rows);
  return d;
}

}  // namespace

TEST_CASE("NoveltyDecay::value reads the table, extrapolates, and floors at 0") {
  auto d = table_decay({{1, 1.0}, {2, 0.5}, {3, 0.25}});
  CHECK(d.value(0.5) == 0.0);
  CHECK(d.value(1.0) == Approx(1.0));
  CHECK(d.value(2.0) == Approx(0.5));
  CHECK(d.value(2.2) == Approx(0.5));  // nearest integer row
  CHECK(d.value(4.0) == Approx(0.25));  // beyond table, no fit: last row

  d.a = -0.3;
  d.b = -0.1;
  CHECK(d.value(10.0) == Approx(std::exp(-0.3 * 10.0 - 0.1)).epsilon(1e-14));
  CHECK(d.value(2.0) == Approx(0.5));  // table still wins inside its range

  NoveltyDecay law_only;
  law_only.a = -0.2;
  law_only.b = 0.0;
  CHECK(law_only.value(3.0) == Approx(std::exp(-0.6)).epsilon(1e-14));

  CHECK_THROWS_AS(NoveltyDecay{}.value(2.0), ValidationError);
}

TEST_CASE("estimate_decay reproduces hand-computed log-growth ratios") {
  // Oracle route: with cohort counts [2,8,16,20] and [3,27,81,100] the mean
  // log increments are d1 = (ln4+ln9)/2 = ln6, d2 = (ln2+ln3)/2 = ln6/2, and
  // d3 = (ln 1.25 + ln(100/81))/2, giving r = d_t / d1.
  Dataset aligned;
  aligned.traces.push_back(counts_at_hours("a", {2, 8, 16, 20}));
  aligned.traces.push_back(counts_at_hours("b", {3, 27, 81, 100}));

  const NoveltyDecay d = dealflow::estimate_decay(aligned, 3);
  REQUIRE(d.r_table.size() == 3);
  CHECK(d.r_table[0].t == Approx(1.0));
  CHECK(d.r_table[0].r == Approx(1.0).epsilon(1e-14));  // pinned by normalization
  CHECK(d.r_table[1].r == Approx(0.49999999999999983).epsilon(1e-13));
  CHECK(d.r_table[2].r == Approx(0.12107221702497392).epsilon(1e-13));
  CHECK(d.traces_used == 2);
  CHECK(d.traces_excluded == 0);
}

TEST_CASE("estimate_decay excludes traces without coverage or positive counts") {
  Dataset aligned;
  aligned.traces.push_back(counts_at_hours("full", {2, 8, 16, 20}));
  aligned.traces.push_back(counts_at_hours("short", {2, 8}));        // covers to hour 1
  aligned.traces.push_back(counts_at_hours("zero", {0, 8, 16, 20})); // log(0) at hour 0

  const NoveltyDecay d = dealflow::estimate_decay(aligned, 3);
  CHECK(d.traces_used == 1);
  CHECK(d.traces_excluded == 2);
  // With only the "full" trace, r(2) = ln2/ln4 = 1/2.
  CHECK(d.r_table[1].r == Approx(0.5).epsilon(1e-13));

  Dataset none;
  none.traces.push_back(counts_at_hours("short", {2, 8}));
  CHECK_THROWS_AS(dealflow::estimate_decay(none, 3), InsufficientDataError);

  Dataset flat;
  flat.traces.push_back(counts_at_hours("flat", {5, 5, 5, 5}));
  CHECK_THROWS_AS(dealflow::estimate_decay(flat, 3), ValidationError);

  CHECK_THROWS_AS(dealflow::estimate_decay(aligned, 0), ValidationError);
}

TEST_CASE("fit_decay_exponential recovers an exact law and skips the pinned row") {
  NoveltyDecay d;
  d.r_table.push_back({1.0, 1.0});  // normalization spike, off the law
  for (int t = 2; t <= 10; ++t) {
    d.r_table.push_back({static_cast<double>(t), std::exp(-0.2 * t - 1.0)});
  }
  const NoveltyDecay fitted = dealflow::fit_decay_exponential(d);
  REQUIRE(fitted.a.has_value());
  REQUIRE(fitted.b.has_value());
  // Exact recovery is only possible because the spike at t = 1 is excluded.
  CHECK(*fitted.a == Approx(-0.2).epsilon(1e-12));
  CHECK(*fitted.b == Approx(-1.0).epsilon(1e-12));
  CHECK(fitted.fit_r2 == Approx(1.0).epsilon(1e-12));
  CHECK(fitted.r_table.size() == d.r_table.size());  // table carried through
}

TEST_CASE("fit_decay_exponential needs 3 usable points and skips r <= 0") {
  NoveltyDecay too_small;
  too_small.r_table = {{1.0, 1.0}, {2.0, 0.5}, {3.0, 0.2}};  // only 2 usable
  CHECK_THROWS_AS(dealflow::fit_decay_exponential(too_small), ValidationError);

  NoveltyDecay with_zeros;
  with_zeros.r_table = {{1.0, 1.0}, {2.0, 0.5}, {3.0, 0.0},
                        {4.0, 0.1}, {5.0, -0.2}, {6.0, 0.02}};
  const auto fitted = dealflow::fit_decay_exponential(with_zeros);
  REQUIRE(fitted.a.has_value());  // 3 usable points: t = 2, 4, 6
  // Fit agrees with a direct line fit through (2, ln .5), (4, ln .1), (6, ln .02).
  const double x_mean = 4.0;
  const double y1 = std::log(0.5), y2 = std::log(0.1), y3 = std::log(0.02);
  const double y_mean = (y1 + y2 + y3) / 3.0;
  const double slope = ((2 - x_mean) * (y1 - y_mean) + (4 - x_mean) * (y2 - y_mean) +
                        (6 - x_mean) * (y3 - y_mean)) /
                       ((2 - x_mean) * (2 - x_mean) + 0.0 + (6 - x_mean) * (6 - x_mean));
  CHECK(*fitted.a == Approx(slope).epsilon(1e-12));
}

TEST_CASE("expected_log_growth sums decayed mean multipliers over whole hours") {
  dealflow::PropagationModel m;
  m.decay = table_decay({{1, 1.0}, {2, 0.5}});
  m.noise.mu_log = std::log(2.0);  // sigma 0: X is the point mass 2
  m.noise.sigma_log = 0.0;
  CHECK(m.noise.mean() == Approx(2.0).epsilon(1e-15));
  CHECK(dealflow::expected_log_growth(m, 2.0) == Approx(3.0).epsilon(1e-14));
  CHECK(dealflow::expected_log_growth(m, 1.5) == Approx(2.0).epsilon(1e-14));
  CHECK(dealflow::expected_log_growth(m, 0.5) == 0.0);
  CHECK_THROWS_AS(dealflow::expected_log_growth(m, -1.0), ValidationError);

  dealflow::GrowthNoise calibrated;
  calibrated.sigma_log = 0.25;
  calibrated.mu_log = std::log(0.1) - 0.5 * 0.25 * 0.25;
  CHECK(calibrated.mean() == Approx(0.1).epsilon(1e-14));
}
