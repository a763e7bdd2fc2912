#pragma once

#include <span>
#include <vector>

namespace flexprice::stats {

/// 1-based ranks; tied values share their average rank.
std::vector<double> ranks(std::span<const double> values);

/// Pearson correlation; NaN when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation (Pearson on average ranks).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace flexprice::stats
