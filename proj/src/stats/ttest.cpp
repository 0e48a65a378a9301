#include "spam/stats/ttest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spam/core/error.hpp"

namespace spam::stats {
namespace {

// Continued fraction for the incomplete beta function; converges quickly
// for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw RuntimeFailure("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw UsageError("incomplete beta needs positive shape parameters");
  if (!(x >= 0.0 && x <= 1.0)) throw UsageError("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// Probability of the tail beyond |t|, one side.
double t_tail(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw UsageError("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) throw UsageError("t statistic is NaN");
  const double tail = t_tail(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

TTest paired_t(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 3) throw UsageError("paired t-test needs at least 3 pairs");
  double mean = 0.0;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw DataError("paired t-test differences must be finite");
    mean += d;
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  if (std::all_of(diffs.begin(), diffs.end(), [&](double d) { return d == diffs[0]; }) || ss == 0.0) {
    throw DataError("paired t-test is degenerate: all differences are identical (zero variance)");
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTest r;
  r.n = n;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(n - 1);
  const double tail = t_tail(r.t, df);
  const double lower = r.t < 0.0 ? tail : 1.0 - tail;
  const double upper = r.t < 0.0 ? 1.0 - tail : tail;
  r.p_one_sided_less = lower;
  r.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper));
  return r;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace spam::stats
