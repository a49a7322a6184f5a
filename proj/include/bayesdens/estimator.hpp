#pragma once

// End-to-end estimator: unit-interval map, binning, spline design, engine
// fit, posterior-mean density with pointwise credible band, and the map back
// to the original units.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bayesdens/error.hpp"
#include "bayesdens/fit.hpp"
#include "bayesdens/model.hpp"
#include "bayesdens/nuts.hpp"
#include "bayesdens/preprocessing.hpp"
#include "bayesdens/slice.hpp"
#include "bayesdens/splines.hpp"

namespace bayesdens {

inline constexpr double kDefaultLevel = 0.95;
inline constexpr Eigen::Index kMinBandDraws = 100;

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

/// Sample quantile by linear interpolation between order statistics, with
/// the p-quantile at 1-based rank (n-1)p + 1. `sorted` must be ascending.
inline double interpolated_quantile(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct UnitCurves {
  std::vector<double> grid;  // unit-interval abscissae
  std::vector<double> mean;  // normalized posterior-mean curve
  Eigen::MatrixXd draws;     // draws x grid, each row normalized on `grid`
  Eigen::VectorXd draw_normalizers;
  double mean_normalizer = 1.0;
};

/// Posterior-mean density on `eval_grid` (normalized by its trapezoid
/// integral) and the per-draw curves, each normalized by its own integral.
inline UnitCurves density_from_samples(const PosteriorSamples& ps, const SplineDesign& sd,
                                       std::span<const double> eval_grid) {
  const Eigen::MatrixXd L = sd.evaluate(eval_grid);
  const Eigen::Index G = L.rows();
  UnitCurves out;
  out.grid.assign(eval_grid.begin(), eval_grid.end());
  out.draws = (ps.coef * L.transpose()).array().exp().matrix();
  if (!out.draws.allFinite()) {
    throw Error(ErrorKind::NonFiniteResult, "density curve overflow");
  }
  out.mean.resize(static_cast<std::size_t>(G));
  Eigen::VectorXd::Map(out.mean.data(), G) = out.draws.colwise().mean().transpose();
  out.mean_normalizer = trapezoid(out.grid, out.mean);
  for (double& v : out.mean) v /= out.mean_normalizer;

  out.draw_normalizers.resize(out.draws.rows());
  std::vector<double> row(static_cast<std::size_t>(G));
  for (Eigen::Index g = 0; g < out.draws.rows(); ++g) {
    Eigen::VectorXd::Map(row.data(), G) = out.draws.row(g).transpose();
    out.draw_normalizers(g) = trapezoid(out.grid, row);
    out.draws.row(g) /= out.draw_normalizers(g);
  }
  if (!(out.mean_normalizer > 0.0) || !std::isfinite(out.mean_normalizer) ||
      !out.draw_normalizers.allFinite()) {
    throw Error(ErrorKind::NonFiniteResult, "density normalizer is not finite");
  }
  return out;
}

struct Band {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Pointwise equal-tailed band over the columns of `draws` (draws x points).
inline Band credible_band(const Eigen::MatrixXd& draws, double level = kDefaultLevel) {
  if (draws.rows() < kMinBandDraws) {
    throw Error(ErrorKind::TooFewDraws, "credible band needs at least 100 draws");
  }
  if (!(level > 0.5 && level < 1.0)) {
    throw Error(ErrorKind::BadConfig, "credible level must lie in (0.5, 1)");
  }
  const double tail = 0.5 * (1.0 - level);
  Band band;
  band.lower.resize(static_cast<std::size_t>(draws.cols()));
  band.upper.resize(static_cast<std::size_t>(draws.cols()));
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    Eigen::VectorXd::Map(column.data(), draws.rows()) = draws.col(j);
    std::sort(column.begin(), column.end());
    band.lower[static_cast<std::size_t>(j)] = interpolated_quantile(column, tail);
    band.upper[static_cast<std::size_t>(j)] = interpolated_quantile(column, 1.0 - tail);
  }
  return band;
}

struct DensityEstimate {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = kDefaultLevel;
  TransformSpec transform;
  Method method = Method::Slice;
};

/// Jacobian of the unit-interval to original-units map at original point x.
inline double unit_to_original_jacobian(const TransformSpec& spec, double x) {
  return spec.log_applied ? 1.0 / (spec.scale * x) : 1.0 / spec.scale;
}

/// Trapezoid integral of the back-transformed density on the back-transformed
/// grid. Exactly the unit-interval integral for an affine map; for the log
/// map the grid is no longer equally spaced and this differs slightly.
inline double output_normalizer(std::span<const double> grid, std::span<const double> density,
                                const TransformSpec& spec) {
  if (!spec.log_applied) return 1.0;
  std::vector<double> x(grid.size());
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    x[i] = apply_transform(spec, grid[i], Direction::Inverse);
    f[i] = density[i] * unit_to_original_jacobian(spec, x[i]);
  }
  return trapezoid(x, f);
}

/// Maps a unit-interval density and band to original units. The affine part
/// divides by the scale; the log part maps x -> exp(x), divides by x and
/// renormalizes on the (now unequally spaced) output grid.
inline DensityEstimate back_transform(std::span<const double> grid,
                                      std::span<const double> density,
                                      const Band& band, const TransformSpec& spec) {
  DensityEstimate est;
  est.transform = spec;
  const std::size_t G = grid.size();
  const double c = output_normalizer(grid, density, spec);
  est.x.resize(G);
  est.density.resize(G);
  est.lower.resize(G);
  est.upper.resize(G);
  for (std::size_t i = 0; i < G; ++i) {
    est.x[i] = apply_transform(spec, grid[i], Direction::Inverse);
    const double jac = unit_to_original_jacobian(spec, est.x[i]) / c;
    est.density[i] = density[i] * jac;
    est.lower[i] = band.lower[i] * jac;
    est.upper[i] = band.upper[i] * jac;
  }
  return est;
}

struct EstimateOptions {
  FitConfig fit;
  Hyperparameters hyper;
  std::size_t grid_size = kDefaultGridSize;
  std::size_t num_basis = kDefaultNumBasis;
  double padding = kDefaultPadding;
  bool log_transform = false;
  double level = kDefaultLevel;
  std::size_t eval_points = 0;  // 0 means the binning grid size
};

inline PosteriorSamples run_engine(const GridCounts& gc, const SplineDesign& sd,
                                   const Hyperparameters& hp, const FitConfig& cfg) {
  return cfg.method == Method::Slice ? fit_slice(gc, sd, hp, cfg) : fit_nuts(gc, sd, hp, cfg);
}

/// A completed fit; keeps what is needed to evaluate the density or its
/// band at arbitrary original-unit points.
class FittedDensity {
 public:
  FittedDensity(std::span<const double> data, const EstimateOptions& opt)
      : opt_(opt) {
    opt_.hyper.validate();
    opt_.fit.validate();
    transform_ = fit_transform(data, opt_.padding, opt_.log_transform);
    const std::vector<double> y = apply_transform(transform_, data, Direction::Forward);
    counts_ = linear_bin(y, opt_.grid_size);
    design_ = make_spline_design(counts_.grid, opt_.num_basis);
    samples_ = run_engine(counts_, design_, opt_.hyper, opt_.fit);
    const std::vector<double> eval =
        opt_.eval_points == 0 ? counts_.grid : unit_grid(opt_.eval_points);
    curves_ = density_from_samples(samples_, design_, eval);
    output_normalizer_ = output_normalizer(curves_.grid, curves_.mean, transform_);
  }

  DensityEstimate summary() const {
    const Band band = credible_band(curves_.draws, opt_.level);
    DensityEstimate est = back_transform(curves_.grid, curves_.mean, band, transform_);
    est.level = opt_.level;
    est.method = opt_.fit.method;
    return est;
  }

  /// Pointwise band for the density at original-unit points x. Points that
  /// map outside the unit interval get a zero band.
  Band band_at(std::span<const double> x, double level) const {
    std::vector<double> y;
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = apply_transform(transform_, x[i], Direction::Forward);
      if (v >= 0.0 && v <= 1.0) {
        y.push_back(v);
        inside.push_back(i);
      }
    }
    Band out{std::vector<double>(x.size(), 0.0), std::vector<double>(x.size(), 0.0)};
    if (y.empty()) return out;
    const Eigen::MatrixXd L = design_.evaluate(y);
    Eigen::MatrixXd draws = (samples_.coef * L.transpose()).array().exp().matrix();
    for (Eigen::Index g = 0; g < draws.rows(); ++g) draws.row(g) /= curves_.draw_normalizers(g);
    const Band unit = credible_band(draws, level);
    for (std::size_t k = 0; k < inside.size(); ++k) {
      const std::size_t i = inside[k];
      const double jac = unit_to_original_jacobian(transform_, x[i]) / output_normalizer_;
      out.lower[i] = unit.lower[k] * jac;
      out.upper[i] = unit.upper[k] * jac;
    }
    return out;
  }

  const TransformSpec& transform() const { return transform_; }
  const GridCounts& counts() const { return counts_; }
  const SplineDesign& design() const { return design_; }
  const PosteriorSamples& samples() const { return samples_; }
  const UnitCurves& curves() const { return curves_; }
  const EstimateOptions& options() const { return opt_; }

 private:
  EstimateOptions opt_;
  TransformSpec transform_;
  GridCounts counts_;
  SplineDesign design_;
  PosteriorSamples samples_;
  UnitCurves curves_;
  double output_normalizer_ = 1.0;
};

inline DensityEstimate estimate(std::span<const double> data, const EstimateOptions& opt) {
  return FittedDensity(data, opt).summary();
}

}  // namespace bayesdens
