#pragma once

#include <span>
#include <string>

namespace spam::stats {

/// Regularized incomplete beta function I_x(a, b), evaluated by a
/// continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct TTest {
  double t = 0.0;
  double p_two_sided = 1.0;
  double p_one_sided_less = 0.5;  ///< P(T <= t)
  std::size_t n = 0;
};

/// One-sample t-test of the mean of paired differences against 0. Throws
/// UsageError for n < 3, DataError when all differences are equal.
TTest paired_t(std::span<const double> diffs);

/// "*", "**" or "***" for p below 0.05, 0.01, 0.001; empty otherwise.
std::string significance_stars(double p);

}  // namespace spam::stats
