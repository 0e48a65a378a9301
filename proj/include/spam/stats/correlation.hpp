#pragma once

#include <span>
#include <vector>

namespace spam::stats {

/// Sample Pearson correlation. Throws UsageError for unequal lengths or
/// n < 3, DataError when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> x);

/// Pearson correlation of fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b in O(n log n). Throws DataError when either input is
/// entirely tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace spam::stats
