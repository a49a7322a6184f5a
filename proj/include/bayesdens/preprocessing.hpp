#pragma once

// Mapping of raw data onto the unit interval and linear binning onto an
// equally spaced grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bayesdens/error.hpp"

namespace bayesdens {

inline constexpr std::size_t kMinSampleSize = 10;
inline constexpr std::size_t kMinGridSize = 11;
inline constexpr double kDefaultPadding = 0.05;
inline constexpr std::size_t kDefaultGridSize = 401;

/// Affine map y = (t - lower) / scale, where t = x or t = log(x).
struct TransformSpec {
  double lower = 0.0;
  double scale = 1.0;
  bool log_applied = false;
};

enum class Direction { Forward, Inverse };

struct GridCounts {
  std::vector<double> grid;         // g_l = (l-1)/(M-1)
  std::vector<double> raw_weights;  // linear-binning weights, sum to n
  std::vector<double> counts;       // raw weights rounded half away from zero
  std::size_t n = 0;

  std::size_t size() const { return grid.size(); }
};

inline TransformSpec fit_transform(std::span<const double> data,
                                   double padding = kDefaultPadding,
                                   bool log_pre = false) {
  if (data.size() < kMinSampleSize) {
    throw Error(ErrorKind::TooFewPoints,
                "need at least " + std::to_string(kMinSampleSize) +
                    " observations, got " + std::to_string(data.size()));
  }
  if (!(padding >= 0.0) || !std::isfinite(padding)) {
    throw Error(ErrorKind::BadConfig, "padding must be finite and >= 0");
  }
  double lo = INFINITY;
  double hi = -INFINITY;
  for (double x : data) {
    if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "non-finite observation");
    if (log_pre && x <= 0.0) {
      throw Error(ErrorKind::NonPositiveForLog,
                  "log pre-transform requires positive data");
    }
    const double t = log_pre ? std::log(x) : x;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) {
    throw Error(ErrorKind::DegenerateRange, "all observations are equal");
  }
  return {lo - padding * range, (1.0 + 2.0 * padding) * range, log_pre};
}

inline double apply_transform(const TransformSpec& spec, double x, Direction dir) {
  if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "non-finite input to transform");
  if (dir == Direction::Forward) {
    const double t = spec.log_applied ? std::log(x) : x;
    return (t - spec.lower) / spec.scale;
  }
  const double t = spec.lower + spec.scale * x;
  return spec.log_applied ? std::exp(t) : t;
}

inline std::vector<double> apply_transform(const TransformSpec& spec,
                                           std::span<const double> xs,
                                           Direction dir) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(apply_transform(spec, x, dir));
  return out;
}

/// Equally spaced grid of M points on [0, 1] with exact end points.
inline std::vector<double> unit_grid(std::size_t M) {
  std::vector<double> g(M);
  for (std::size_t l = 0; l < M; ++l) {
    g[l] = static_cast<double>(l) / static_cast<double>(M - 1);
  }
  return g;
}

inline GridCounts linear_bin(std::span<const double> y,
                             std::size_t M = kDefaultGridSize) {
  if (M < kMinGridSize) {
    throw Error(ErrorKind::GridTooSmall,
                "grid size must be at least " + std::to_string(kMinGridSize));
  }
  GridCounts gc;
  gc.grid = unit_grid(M);
  gc.raw_weights.assign(M, 0.0);
  gc.n = y.size();
  const double cells = static_cast<double>(M - 1);
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::OutOfRange, "binned value outside [0, 1]");
    }
    const double pos = v * cells;
    auto left = static_cast<std::size_t>(std::floor(pos));
    if (left >= M - 1) {
      gc.raw_weights[M - 1] += 1.0;
      continue;
    }
    const double frac = pos - static_cast<double>(left);
    gc.raw_weights[left] += 1.0 - frac;
    gc.raw_weights[left + 1] += frac;
  }
  gc.counts.resize(M);
  std::transform(gc.raw_weights.begin(), gc.raw_weights.end(), gc.counts.begin(),
                 [](double w) { return std::round(w); });
  return gc;
}

}  // namespace bayesdens
