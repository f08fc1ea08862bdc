#include "leea/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leea/errors.hpp"

namespace leea {

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

struct Pooled {
  std::vector<double> ranks;  // first n belong to a
  double u = 0.0;
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

Pooled pool(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("Mann-Whitney U needs two non-empty samples");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  if (std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); })) {
    throw ValidationError("Mann-Whitney U is degenerate: every value is identical");
  }
  Pooled p;
  p.ranks = midranks(all);
  const double n = static_cast<double>(a.size());
  const double rank_sum = std::accumulate(p.ranks.begin(), p.ranks.begin() + static_cast<long>(a.size()), 0.0);
  p.u = rank_sum - n * (n + 1.0) / 2.0;

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    p.tie_term += t * t * t - t;
    i = j;
  }
  return p;
}

}  // namespace

MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
  const Pooled p = pool(a, b);
  const std::size_t n = a.size();
  const std::size_t total = p.ranks.size();

  // Midranks are multiples of 1/2, so doubled ranks are integers and the
  // rank-sum distribution can be counted with a subset-sum table.
  std::vector<std::size_t> doubled(total);
  for (std::size_t i = 0; i < total; ++i) doubled[i] = static_cast<std::size_t>(std::lround(2.0 * p.ranks[i]));
  const std::size_t max_sum = std::accumulate(doubled.begin(), doubled.end(), std::size_t{0});
  std::size_t observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += doubled[i];

  // ways[k][s]: number of k-subsets of the items seen so far with doubled rank sum s.
  std::vector<std::vector<double>> ways(n + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t item = 0; item < total; ++item) {
    const std::size_t r = doubled[item];
    for (std::size_t k = std::min(n, item + 1); k >= 1; --k) {
      const auto& from = ways[k - 1];
      auto& to = ways[k];
      for (std::size_t s = max_sum; s >= r; --s) {
        to[s] += from[s - r];
        if (s == r) break;
      }
    }
  }
  double at_least = 0.0, all_subsets = 0.0;
  for (std::size_t s = 0; s <= max_sum; ++s) {
    all_subsets += ways[n][s];
    if (s >= observed) at_least += ways[n][s];
  }
  return {p.u, at_least / all_subsets, true};
}

MannWhitneyResult mann_whitney_normal(std::span<const double> a, std::span<const double> b) {
  const Pooled p = pool(a, b);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  const double total = n + m;
  const double variance = n * m / 12.0 * ((total + 1.0) - p.tie_term / (total * (total - 1.0)));
  if (!(variance > 0.0)) throw ValidationError("Mann-Whitney U variance is zero");
  const double z = (p.u - n * m / 2.0 - 0.5) / std::sqrt(variance);
  return {p.u, 0.5 * std::erfc(z / std::sqrt(2.0)), false};
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.size() * b.size() <= kExactMannWhitneyLimit) return mann_whitney_exact(a, b);
  return mann_whitney_normal(a, b);
}

double quantile(std::span<const double> sample, double q) {
  if (sample.empty()) throw ValidationError("quantile of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::span<const double> sample) { return quantile(sample, 0.5); }

Summary summarize(std::span<const double> sample) {
  if (sample.empty()) throw ValidationError("summary of an empty sample");
  Summary s;
  s.count = sample.size();
  s.min = *std::min_element(sample.begin(), sample.end());
  s.max = *std::max_element(sample.begin(), sample.end());
  s.q1 = quantile(sample, 0.25);
  s.median = quantile(sample, 0.5);
  s.q3 = quantile(sample, 0.75);
  return s;
}

double relative_improvement(std::span<const double> low, std::span<const double> high) {
  const double base = median(low);
  if (!(base > 0.0)) throw ValidationError("relative improvement needs a positive baseline median");
  return (median(high) - base) / base * 100.0;
}

}  // namespace leea
