#pragma once

// Simulation harness: normal-mixture truths, the L1 accuracy score and the
// decile coverage experiment.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bayesdens/error.hpp"
#include "bayesdens/estimator.hpp"
#include "bayesdens/rng.hpp"

namespace bayesdens {

struct NormalMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;

  void validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size()) {
      throw Error(ErrorKind::BadConfig, "mixture weights, means and sds must have equal length");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (!(weights[j] >= 0.0) || !(sds[j] > 0.0) || !std::isfinite(means[j]) ||
          !std::isfinite(sds[j])) {
        throw Error(ErrorKind::BadConfig, "invalid mixture component");
      }
      total += weights[j];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorKind::BadConfig, "mixture weights must sum to 1");
    }
  }

  double span_low(double sds_out) const {
    return *std::min_element(means.begin(), means.end()) -
           sds_out * *std::max_element(sds.begin(), sds.end());
  }
  double span_high(double sds_out) const {
    return *std::max_element(means.begin(), means.end()) +
           sds_out * *std::max_element(sds.begin(), sds.end());
  }
};

/// Separated bimodal benchmark: 3/4 N(0, 1) + 1/4 N(3/2, (1/3)^2).
inline NormalMixture mw8() { return {{0.75, 0.25}, {0.0, 1.5}, {1.0, 1.0 / 3.0}}; }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double mixture_pdf(const NormalMixture& mix, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < mix.weights.size(); ++j) {
    s += mix.weights[j] * normal_pdf((x - mix.means[j]) / mix.sds[j]) / mix.sds[j];
  }
  return s;
}

inline double mixture_cdf(const NormalMixture& mix, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < mix.weights.size(); ++j) {
    s += mix.weights[j] * normal_cdf((x - mix.means[j]) / mix.sds[j]);
  }
  return s;
}

inline std::vector<double> mixture_sample(const NormalMixture& mix, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& x : out) {
    const double u = rng.uniform();
    std::size_t j = 0;
    double cum = mix.weights[0];
    while (u > cum && j + 1 < mix.weights.size()) cum += mix.weights[++j];
    x = mix.means[j] + mix.sds[j] * rng.normal();
  }
  return out;
}

inline double mixture_quantile(const NormalMixture& mix, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::BadConfig, "quantile level must lie in (0, 1)");
  double lo = mix.span_low(10.0);
  double hi = mix.span_high(10.0);
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mixture_cdf(mix, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Piecewise-linear interpolation of a grid curve, zero outside its range.
inline double interpolate_curve(std::span<const double> x, std::span<const double> f, double t) {
  if (x.empty() || t < x.front() || t > x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.end()) return f.back();
  const auto i = static_cast<std::size_t>(it - x.begin());
  if (i == 0) return f.front();
  const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - w) * f[i - 1] + w * f[i];
}

inline constexpr std::size_t kAccuracyPoints = 10001;
inline constexpr double kAccuracySpanSds = 5.0;

/// 100 (1 - L1/2) on kAccuracyPoints equally spaced points spanning [lo, hi].
template <typename F, typename G>
double l1_score(F&& f, G&& g, double lo, double hi) {
  const double h = (hi - lo) / static_cast<double>(kAccuracyPoints - 1);
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < kAccuracyPoints; ++i) {
    const double t = i + 1 == kAccuracyPoints ? hi : lo + h * static_cast<double>(i);
    const double d = std::abs(f(t) - g(t));
    if (i > 0) integral += 0.5 * h * (d + prev);
    prev = d;
  }
  return 100.0 * (1.0 - 0.5 * integral);
}

inline double l1_accuracy(const DensityEstimate& est, const NormalMixture& mix) {
  const double lo = std::min(est.x.front(), mix.span_low(kAccuracySpanSds));
  const double hi = std::max(est.x.back(), mix.span_high(kAccuracySpanSds));
  return l1_score([&](double t) { return interpolate_curve(est.x, est.density, t); },
                  [&](double t) { return mixture_pdf(mix, t); }, lo, hi);
}

/// Accuracy between two grid curves over the union of their ranges.
inline double l1_accuracy(std::span<const double> xa, std::span<const double> fa,
                          std::span<const double> xb, std::span<const double> fb) {
  const double lo = std::min(xa.front(), xb.front());
  const double hi = std::max(xa.back(), xb.back());
  return l1_score([&](double t) { return interpolate_curve(xa, fa, t); },
                  [&](double t) { return interpolate_curve(xb, fb, t); }, lo, hi);
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; results must be written to per-index slots.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  const unsigned n = std::min<std::size_t>(threads, count);
  std::vector<std::exception_ptr> errors(n);
  for (unsigned w = 0; w < n; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  workers.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Per-replication random streams: data from (seed, 2r), engine from (seed, 2r+1).
inline std::uint64_t data_stream(std::size_t r) { return 2 * static_cast<std::uint64_t>(r); }
inline std::uint64_t fit_seed(std::uint64_t seed, std::size_t r) {
  return derive_seed(seed, 2 * static_cast<std::uint64_t>(r) + 1);
}

inline constexpr std::size_t kNumDeciles = 9;

struct CoverageTable {
  std::vector<double> coverage_pct;  // D_1 .. D_9
  std::vector<double> deciles;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::size_t n = 0;
  Method method = Method::Slice;
};

/// Produces the band at `points` from a sample; `seed` drives the engine.
using BandProvider =
    std::function<Band(std::span<const double> sample, std::span<const double> points,
                       std::uint64_t seed)>;

inline BandProvider bayes_band_provider(const EstimateOptions& opt) {
  return [opt](std::span<const double> sample, std::span<const double> points,
               std::uint64_t seed) {
    EstimateOptions o = opt;
    o.fit.seed = seed;
    return FittedDensity(sample, o).band_at(points, o.level);
  };
}

inline CoverageTable coverage_experiment(const NormalMixture& mix, std::size_t n,
                                         std::size_t replications, std::uint64_t seed,
                                         const BandProvider& provider, Method method,
                                         unsigned threads = 1) {
  mix.validate();
  if (replications < 50) throw Error(ErrorKind::BadConfig, "coverage needs at least 50 replications");
  CoverageTable table;
  table.replications = replications;
  table.n = n;
  table.method = method;
  for (std::size_t j = 1; j <= kNumDeciles; ++j) {
    table.deciles.push_back(mixture_quantile(mix, static_cast<double>(j) / 10.0));
  }
  std::vector<double> truth;
  for (double d : table.deciles) truth.push_back(mixture_pdf(mix, d));

  // 1 = covered, 0 = missed, per replication and decile; failed[r] marks fit errors
  std::vector<std::vector<int>> hits(replications);
  std::vector<char> failed(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    Rng rng(seed, data_stream(r));
    const std::vector<double> sample = mixture_sample(mix, n, rng);
    try {
      const Band band = provider(sample, table.deciles, fit_seed(seed, r));
      hits[r].resize(kNumDeciles);
      for (std::size_t j = 0; j < kNumDeciles; ++j) {
        hits[r][j] = band.lower[j] <= truth[j] && truth[j] <= band.upper[j] ? 1 : 0;
      }
    } catch (const Error& e) {
      if (!is_numeric_failure(e.kind())) throw;
      failed[r] = 1;
    }
  });

  table.coverage_pct.assign(kNumDeciles, 0.0);
  std::size_t ok = 0;
  for (std::size_t r = 0; r < replications; ++r) {
    if (failed[r]) {
      ++table.failures;
      continue;
    }
    ++ok;
    for (std::size_t j = 0; j < kNumDeciles; ++j) table.coverage_pct[j] += hits[r][j];
  }
  for (double& c : table.coverage_pct) c = ok > 0 ? 100.0 * c / static_cast<double>(ok) : 0.0;
  return table;
}

inline CoverageTable coverage_experiment(const NormalMixture& mix, std::size_t n,
                                         std::size_t replications, std::uint64_t seed,
                                         const EstimateOptions& opt, unsigned threads = 1) {
  return coverage_experiment(mix, n, replications, seed, bayes_band_provider(opt),
                             opt.fit.method, threads);
}

struct AccuracyRow {
  std::size_t replication = 0;
  Method method = Method::Slice;
  std::size_t n = 0;
  double accuracy = 0.0;  // NaN when the fit failed
  double seconds = 0.0;
};

inline std::vector<AccuracyRow> accuracy_experiment(const NormalMixture& mix, std::size_t n,
                                                    std::size_t replications,
                                                    std::uint64_t seed,
                                                    const EstimateOptions& opt,
                                                    unsigned threads = 1) {
  mix.validate();
  std::vector<AccuracyRow> rows(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    Rng rng(seed, data_stream(r));
    const std::vector<double> sample = mixture_sample(mix, n, rng);
    EstimateOptions o = opt;
    o.fit.seed = fit_seed(seed, r);
    AccuracyRow& row = rows[r];
    row.replication = r;
    row.method = o.fit.method;
    row.n = n;
    const auto start = std::chrono::steady_clock::now();
    try {
      row.accuracy = l1_accuracy(estimate(sample, o), mix);
    } catch (const Error& e) {
      if (!is_numeric_failure(e.kind())) throw;
      row.accuracy = std::nan("");
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

}  // namespace bayesdens
