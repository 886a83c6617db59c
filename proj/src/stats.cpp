#include "dealflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dealflow/errors.hpp"

namespace dealflow {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_line: x/y size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("fit_line: need at least 2 points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ValidationError("fit_line: all x values identical");

  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.n = n;
  if (syy == 0.0) {
    f.r2 = 1.0;  // constant y fitted exactly by the horizontal line
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - (f.slope * x[i] + f.intercept);
      ss_res += e * e;
    }
    f.r2 = 1.0 - ss_res / syy;
  }
  return f;
}

double log_gamma(double a) { return std::lgamma(a); }

namespace {

// Series expansion of P(a, x), valid/fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid/fast for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0) throw ValidationError("gamma_p: shape must be positive");
  if (x < 0.0) throw ValidationError("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

namespace {

double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ValidationError("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw ValidationError("incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the expansion that converges fastest; the two halves are related by
  // I_x(a,b) = 1 - I_{1-x}(b,a).
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (df <= 0.0) throw ValidationError("student_t_sf: df must be positive");
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double student_t_two_sided_p(double t, double df) {
  return 2.0 * student_t_sf(std::abs(t), df);
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0) throw ValidationError("ks_critical_value: empty sample");
  if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("ks_critical_value: alpha in (0,1)");
  const double k_alpha = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  return k_alpha / (sqrt_n + 0.12 + 0.11 / sqrt_n);
}

KsResult ks_test_sorted(std::span<const double> cdf_values, double alpha) {
  const std::size_t n = cdf_values.size();
  if (n == 0) throw ValidationError("ks_test_sorted: empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf_values[i];
    const double upper = (static_cast<double>(i) + 1.0) / static_cast<double>(n) - f;
    const double lower = f - static_cast<double>(i) / static_cast<double>(n);
    d = std::max({d, upper, lower});
  }
  KsResult r;
  r.statistic = d;
  r.critical_value = ks_critical_value(n, alpha);
  r.reject = d > r.critical_value;
  return r;
}

MeanSem mean_sem(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean_sem: empty input");
  MeanSem m;
  m.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n == 1) {
    m.sem = 0.0;
    return m;
  }
  double ss = 0.0;
  for (double v : values) {
    const double dv = v - m.mean;
    ss += dv * dv;
  }
  const double var = ss / static_cast<double>(m.n - 1);
  m.sem = std::sqrt(var / static_cast<double>(m.n));
  return m;
}

}  // namespace dealflow
