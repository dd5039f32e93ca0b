#include "screenlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace screenlab::stats {

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 1000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a and b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  // The continued fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double inverse_incomplete_beta(double a, double b, double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double x = a / (a + b);
  const double lb = log_beta(a, b);
  for (int iteration = 0; iteration < 200; ++iteration) {
    const double f = incomplete_beta(a, b, x) - y;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    const double log_density = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
    double next = x - f / std::exp(log_density);
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-15 || hi - lo < 1e-15) return next;
    x = next;
  }
  return x;
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  const double log_choose = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_choose + kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

double binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  double total = 0.0;
  for (std::uint64_t j = n + 1; j-- > k;) total += std::exp(log_binomial_pmf(j, n, p));
  return std::min(total, 1.0);
}

std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t n, double level) {
  if (n == 0 || successes > n) throw std::domain_error("clopper_pearson: need 0 <= successes <= n, n > 0");
  if (!(level > 0.0 && level < 1.0)) throw std::domain_error("clopper_pearson: level in (0, 1)");
  const double alpha = 1.0 - level;
  const double k = static_cast<double>(successes);
  const double nd = static_cast<double>(n);
  const double low = successes == 0 ? 0.0 : inverse_incomplete_beta(k, nd - k + 1.0, alpha / 2.0);
  const double high =
      successes == n ? 1.0 : inverse_incomplete_beta(k + 1.0, nd - k, 1.0 - alpha / 2.0);
  return {low, high};
}

double nir_test(std::uint64_t successes, std::uint64_t n, double nir) {
  if (!(nir > 0.0 && nir < 1.0)) throw std::domain_error("nir_test: nir must lie in (0, 1)");
  return binomial_upper_tail(successes, n, nir);
}

double pessimistic_error_rate(double errors, double n, double cf) {
  if (n <= 0.0) return 0.0;
  if (errors >= n) return 1.0;
  // Largest p with P[X <= errors | n, p] >= cf, i.e. the Beta(errors+1, n-errors) quantile.
  return inverse_incomplete_beta(errors + 1.0, n - errors, 1.0 - cf);
}

}  // namespace screenlab::stats
