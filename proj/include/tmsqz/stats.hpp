#pragma once

// Small statistics helpers for the "split into k sets" standard errors used
// throughout the analysis chain.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tmsqz::stats {

/// Contiguous [begin, end) ranges splitting n items into k nearly equal sets.
inline std::vector<std::pair<std::size_t, std::size_t>> split_ranges(std::size_t n, std::size_t k) {
  if (k == 0 || n < k) throw std::invalid_argument("split_ranges: need at least k items");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(i * n / k, (i + 1) * n / k);
  return out;
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Standard error of the mean of per-set estimates: sd / sqrt(k).
inline double split_stderr(std::span<const double> estimates) {
  const std::size_t k = estimates.size();
  if (k < 2) return 0.0;
  const double m = mean(estimates);
  double ss = 0.0;
  for (double v : estimates) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
}

}  // namespace tmsqz::stats
