#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace bayesdens {

inline double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Monte Carlo standard error of the mean of a (possibly autocorrelated)
/// chain by non-overlapping batch means.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 25) {
  const std::size_t len = x.size() / batches;
  if (len < 2) return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
  const double m = sample_mean(x.first(len * batches));
  double s = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double bm = sample_mean(x.subspan(b * len, len));
    s += (bm - m) * (bm - m);
  }
  return std::sqrt(s / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

}  // namespace bayesdens
