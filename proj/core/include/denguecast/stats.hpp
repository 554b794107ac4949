#pragma once

#include <span>
#include <vector>

namespace denguecast::stats {

/// Type-7 (linear interpolation of order statistics) quantile of already
/// sorted values. Throws ValidationError on empty input.
double quantile_sorted(std::span<const double> sorted, double p);

/// Type-7 quantiles of unsorted values.
std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs);
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

/// Ranks starting at 1, ties receive the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation (Pearson correlation of average ranks). Returns
/// 0 when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace denguecast::stats
