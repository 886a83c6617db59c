#include <doctest.h>

#include <cmath>
#include <vector>

#include "dealflow/errors.hpp"
#include "dealflow/rng.hpp"
#include "dealflow/stats.hpp"

using dealflow::ValidationError;
using doctest::Approx;

TEST_CASE("fit_line matches an independently computed least-squares fit") {
  // Reference values computed with numpy.polyfit / corrcoef.
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2.1, 3.9, 6.2, 7.8, 10.1};
  const auto f = dealflow::fit_line(x, y);
  CHECK(f.slope == Approx(1.9900000000000002).epsilon(1e-12));
  CHECK(f.intercept == Approx(0.05).epsilon(1e-9));
  CHECK(f.r2 == Approx(0.9973053289009771).epsilon(1e-12));
  CHECK(f.n == 5);
}

TEST_CASE("fit_line is exact on exact lines") {
  const std::vector<double> x{-2, 0, 1, 5, 9};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v - 2.0);
  const auto f = dealflow::fit_line(x, y);
  CHECK(f.slope == Approx(3.0).epsilon(1e-14));
  CHECK(f.intercept == Approx(-2.0).epsilon(1e-13));
  CHECK(f.r2 == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fit_line handles constant y and rejects degenerate inputs") {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{4, 4, 4};
  const auto f = dealflow::fit_line(x, y);
  CHECK(f.slope == Approx(0.0));
  CHECK(f.r2 == Approx(1.0));

  CHECK_THROWS_AS(dealflow::fit_line(std::vector<double>{1.0}, std::vector<double>{2.0}),
                  ValidationError);
  CHECK_THROWS_AS(dealflow::fit_line(std::vector<double>{2, 2, 2}, y), ValidationError);
  CHECK_THROWS_AS(dealflow::fit_line(x, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("gamma_p matches scipy.special.gammainc reference values") {
  CHECK(dealflow::gamma_p(1.0, 1.0) == Approx(0.6321205588285577).epsilon(1e-13));
  CHECK(dealflow::gamma_p(10.0, 12.0) == Approx(0.7576078383294875).epsilon(1e-13));
  CHECK(dealflow::gamma_p(10.0, 48.0) == Approx(0.9999999999934982).epsilon(1e-13));
  CHECK(dealflow::gamma_p(3.0, 3.0) == Approx(0.5768099188731566).epsilon(1e-13));
  // Deep tails exercise the log-space prefactor.
  CHECK(dealflow::gamma_p(500.0, 300.0) == Approx(3.807423416288127e-26).epsilon(1e-9));
  CHECK(dealflow::gamma_p(500.0, 600.0) == Approx(0.9999877440576694).epsilon(1e-12));
  CHECK(dealflow::gamma_p(200.0, 150.0) == Approx(5.709688574208249e-05).epsilon(1e-10));
  CHECK(dealflow::gamma_p(200.0, 260.0) == Approx(0.999952499875557).epsilon(1e-12));
}

TEST_CASE("gamma_p agrees with the closed form at shape 1 and is a CDF in x") {
  dealflow::RngStream rng(101, 0);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform01() * 20.0;
    CHECK(dealflow::gamma_p(1.0, x) == Approx(1.0 - std::exp(-x)).epsilon(1e-12));
  }
  for (int i = 0; i < 50; ++i) {
    const double a = 0.5 + rng.uniform01() * 50.0;
    double prev = dealflow::gamma_p(a, 0.0);
    CHECK(prev == 0.0);
    for (double x = 0.25; x < 4.0 * a; x += 0.5 + a / 8.0) {
      const double cur = dealflow::gamma_p(a, x);
      CHECK(cur >= prev);
      CHECK(cur <= 1.0);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(dealflow::gamma_p(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(dealflow::gamma_p(2.0, -0.1), ValidationError);
}

TEST_CASE("incomplete_beta satisfies its reflection identity and endpoints") {
  dealflow::RngStream rng(102, 0);
  for (int i = 0; i < 200; ++i) {
    const double a = 0.3 + rng.uniform01() * 20.0;
    const double b = 0.3 + rng.uniform01() * 20.0;
    const double x = rng.uniform01() * 0.999;
    const double lhs = dealflow::incomplete_beta(a, b, x);
    const double rhs = 1.0 - dealflow::incomplete_beta(b, a, 1.0 - x);
    CHECK(lhs == Approx(rhs).epsilon(1e-10));
    CHECK(lhs >= 0.0);
    CHECK(lhs <= 1.0);
    // I_x(1, 1) is the uniform CDF.
    CHECK(dealflow::incomplete_beta(1.0, 1.0, x) == Approx(x).epsilon(1e-12));
  }
  CHECK(dealflow::incomplete_beta(2.5, 3.5, 0.0) == 0.0);
  CHECK(dealflow::incomplete_beta(2.5, 3.5, 1.0) == 1.0);
  CHECK_THROWS_AS(dealflow::incomplete_beta(0.0, 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(dealflow::incomplete_beta(1.0, 1.0, 1.5), ValidationError);
}

TEST_CASE("student_t_sf matches scipy.stats.t.sf reference values") {
  CHECK(dealflow::student_t_sf(2.0, 10.0) == Approx(0.036694017385370196).epsilon(1e-12));
  CHECK(dealflow::student_t_sf(1.0, 3.0) == Approx(0.19550110947788527).epsilon(1e-12));
  CHECK(dealflow::student_t_sf(0.5, 1.0) == Approx(0.3524163823495668).epsilon(1e-12));
  CHECK(dealflow::student_t_sf(3.0, 30.0) == Approx(0.002694982032825972).epsilon(1e-12));
  // Huge statistic, huge df: the far tail must stay finite and accurate.
  CHECK(dealflow::student_t_sf(25.2276, 3857.0) ==
        Approx(2.0746658813062143e-130).epsilon(1e-8));
}

TEST_CASE("student_t_sf symmetry and two-sided p-values") {
  dealflow::RngStream rng(103, 0);
  CHECK(dealflow::student_t_sf(0.0, 7.0) == Approx(0.5).epsilon(1e-14));
  for (int i = 0; i < 100; ++i) {
    const double t = (rng.uniform01() - 0.5) * 12.0;
    const double df = 1.0 + rng.uniform01() * 60.0;
    CHECK(dealflow::student_t_sf(t, df) + dealflow::student_t_sf(-t, df) ==
          Approx(1.0).epsilon(1e-12));
    CHECK(dealflow::student_t_two_sided_p(t, df) ==
          Approx(2.0 * dealflow::student_t_sf(std::abs(t), df)).epsilon(1e-14));
  }
  CHECK(dealflow::student_t_sf(1.0, 5.0) > dealflow::student_t_sf(2.0, 5.0));
  CHECK(dealflow::student_t_two_sided_p(0.0, 9.0) == Approx(1.0));
  CHECK_THROWS_AS(dealflow::student_t_sf(1.0, 0.0), ValidationError);
}

TEST_CASE("ks_critical_value matches the small-sample-corrected formula") {
  CHECK(dealflow::ks_critical_value(10000, 0.01) ==
        Approx(0.016256549625590703).epsilon(1e-14));
  CHECK(dealflow::ks_critical_value(100, 0.05) ==
        Approx(0.13405404360286446).epsilon(1e-14));
  CHECK_THROWS_AS(dealflow::ks_critical_value(0, 0.05), ValidationError);
  CHECK_THROWS_AS(dealflow::ks_critical_value(10, 0.0), ValidationError);
  CHECK_THROWS_AS(dealflow::ks_critical_value(10, 1.0), ValidationError);
}

TEST_CASE("ks_test_sorted accepts a perfect fit and rejects a gross mismatch") {
  const std::size_t n = 500;
  std::vector<double> perfect(n), shifted(n);
  for (std::size_t i = 0; i < n; ++i) {
    perfect[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    // CDF values compressed into [0, 0.8]: ECDF deviates by >= 0.2 at the top.
    shifted[i] = 0.8 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  const auto good = dealflow::ks_test_sorted(perfect, 0.01);
  CHECK(good.statistic == Approx(0.5 / static_cast<double>(n)).epsilon(1e-12));
  CHECK_FALSE(good.reject);

  const auto bad = dealflow::ks_test_sorted(shifted, 0.01);
  CHECK(bad.statistic > 0.19);
  CHECK(bad.reject);
  CHECK_THROWS_AS(dealflow::ks_test_sorted(std::vector<double>{}, 0.05), ValidationError);
}

TEST_CASE("mean_sem computes the mean and its standard error") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = dealflow::mean_sem(v);
  CHECK(m.mean == Approx(2.5).epsilon(1e-15));
  CHECK(m.sem == Approx(0.6454972243679028).epsilon(1e-14));
  CHECK(m.n == 4);

  const auto single = dealflow::mean_sem(std::vector<double>{7.0});
  CHECK(single.mean == Approx(7.0));
  CHECK(single.sem == 0.0);
  CHECK_THROWS_AS(dealflow::mean_sem(std::vector<double>{}), ValidationError);
}
