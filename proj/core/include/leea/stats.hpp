#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leea {

/// Midranks (1-based, ties share the mean rank) of `values` in input order.
std::vector<double> midranks(std::span<const double> values);

struct MannWhitneyResult {
  /// U statistic of sample a: pairs with a > b plus half the ties.
  double u = 0.0;
  /// One-sided p-value for the alternative "a is stochastically greater than b".
  double p_value = 1.0;
  bool exact = false;
};

/// Sample sizes with n * m at or below this use the exact permutation distribution.
inline constexpr std::size_t kExactMannWhitneyLimit = 400;

/// One-sided Mann-Whitney U test. Exact when n*m <= 400, otherwise the normal
/// approximation. Throws ValidationError on an empty sample or when every
/// value in both samples is identical.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// P(U >= u_observed) under the permutation null, counting every assignment
/// of the pooled midranks to sample a (ties handled exactly).
MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b);

/// Normal approximation with tie-corrected variance and 0.5 continuity correction.
MannWhitneyResult mann_whitney_normal(std::span<const double> a, std::span<const double> b);

/// Box-plot statistics. Quartiles interpolate linearly between closest ranks,
/// i.e. position (N - 1) * q in the sorted sample.
struct Summary {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Summary summarize(std::span<const double> sample);
double quantile(std::span<const double> sample, double q);
double median(std::span<const double> sample);

/// Percent change of the median going from `low` to `high`:
/// (median(high) - median(low)) / median(low) * 100.
double relative_improvement(std::span<const double> low, std::span<const double> high);

}  // namespace leea
