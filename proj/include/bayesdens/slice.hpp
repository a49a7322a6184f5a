#pragma once

// Slice sampling within Gibbs for the Poisson spline model. Every
// coefficient has a full conditional of the form
//
//   p(x) propto exp{ s1 x - x^2/(2 s2) - sum_j exp(x s3_j + s4_j) },
//
// which is log-concave, so Neal's stepping-out and shrinkage procedure finds
// the (single-interval) slice. The variance parameters have Inverse-Gamma
// full conditionals.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <span>

#include "bayesdens/error.hpp"
#include "bayesdens/fit.hpp"
#include "bayesdens/model.hpp"
#include "bayesdens/rng.hpp"

namespace bayesdens {

inline constexpr int kMaxShrinkSteps = 1000;

/// Log of the unnormalized conditional density above.
inline double log_h_density(double x, double s1, double s2, std::span<const double> s3,
                            std::span<const double> s4) {
  const auto n = static_cast<Eigen::Index>(s3.size());
  const Eigen::Map<const Eigen::ArrayXd> a3(s3.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> a4(s4.data(), n);
  return s1 * x - x * x / (2.0 * s2) - (x * a3 + a4).exp().sum();
}

/// One stepping-out/shrinkage slice update of a univariate log density
/// starting from x0.
template <typename LogDensity>
double slice_step(LogDensity&& log_density, double x0, double width, int max_steps,
                  Rng& rng) {
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) {
    throw Error(ErrorKind::NonFiniteResult, "slice sampler started at a point of zero density");
  }
  const double level = f0 - rng.exponential();

  double left = x0 - width * rng.uniform();
  double right = left + width;
  int steps_left = static_cast<int>(std::floor(max_steps * rng.uniform()));
  int steps_right = max_steps - 1 - steps_left;
  while (steps_left > 0 && log_density(left) > level) {
    left -= width;
    --steps_left;
  }
  while (steps_right > 0 && log_density(right) > level) {
    right += width;
    --steps_right;
  }

  for (int i = 0; i < kMaxShrinkSteps; ++i) {
    const double x1 = left + rng.uniform() * (right - left);
    if (log_density(x1) > level) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
  }
  throw Error(ErrorKind::SliceStuck, "no acceptance after shrinkage limit");
}

/// Draw from the H(s1, s2, s3, s4) conditional by one slice update from x0.
inline double sample_h(double s1, double s2, std::span<const double> s3,
                       std::span<const double> s4, double x0, const FitConfig& cfg,
                       Rng& rng) {
  return slice_step([&](double x) { return log_h_density(x, s1, s2, s3, s4); }, x0,
                    cfg.slice_width, cfg.slice_max_steps, rng);
}

/// a | sigma2 ~ Inverse-Gamma(1, 1/sigma2 + 1/s_sigma^2).
inline double draw_auxiliary(double sigma2, const Hyperparameters& hp, Rng& rng) {
  return rng.inverse_gamma(1.0, 1.0 / sigma2 + 1.0 / (hp.s_sigma * hp.s_sigma));
}

/// sigma2 | u, a ~ Inverse-Gamma((K+1)/2, ||u||^2/2 + 1/a).
inline double draw_sigma2(double u_squared_norm, Eigen::Index K, double a, Rng& rng) {
  return rng.inverse_gamma(0.5 * static_cast<double>(K + 1), 0.5 * u_squared_norm + 1.0 / a);
}

/// Gibbs state for the slice engine. Keeps the linear predictor in sync with
/// the coefficients so each coordinate update costs O(M) per density call.
class SliceGibbs {
 public:
  SliceGibbs(const PoissonSplineModel& model, const FitConfig& cfg)
      : model_(model), cfg_(cfg), rng_(cfg.seed) {
    const auto& C = model_.design();
    coef_ = Eigen::VectorXd::Zero(C.cols());
    coef_(0) = std::log(model_.counts().mean() + 0.1);
    eta_ = C * coef_;
    offset_.resize(C.rows());
  }

  void sweep() {
    const auto& C = model_.design();
    const auto& Ctc = model_.design_counts();
    const double sb2 = model_.hyper().sigma_beta * model_.hyper().sigma_beta;
    const Eigen::Index p = coef_.size();
    const Eigen::Index K = p - 2;
    eta_.noalias() = C * coef_;

    for (Eigen::Index j = 0; j < p; ++j) {
      const double var = j < 2 ? sb2 : sigma2_;
      const auto col = C.col(j);
      offset_ = eta_ - coef_(j) * col;
      const std::span<const double> s3(col.data(), static_cast<std::size_t>(col.size()));
      const std::span<const double> s4(offset_.data(), static_cast<std::size_t>(offset_.size()));
      const double x = sample_h(Ctc(j), var, s3, s4, coef_(j), cfg_, rng_);
      coef_(j) = x;
      eta_ = offset_ + x * col;
    }

    a_ = draw_auxiliary(sigma2_, model_.hyper(), rng_);
    sigma2_ = draw_sigma2(coef_.tail(K).squaredNorm(), K, a_, rng_);
    if (!std::isfinite(sigma2_) || !(sigma2_ > 0.0) || !eta_.allFinite()) {
      throw Error(ErrorKind::NonFiniteResult, "Gibbs sweep produced a non-finite state");
    }
  }

  const Eigen::VectorXd& coef() const { return coef_; }
  double sigma2() const { return sigma2_; }
  double a() const { return a_; }
  Rng& rng() { return rng_; }

 private:
  const PoissonSplineModel& model_;
  FitConfig cfg_;
  Rng rng_;
  Eigen::VectorXd coef_;
  Eigen::VectorXd eta_;
  Eigen::VectorXd offset_;
  double sigma2_ = 1.0;
  double a_ = 1.0;
};

inline PosteriorSamples fit_slice(const PoissonSplineModel& model, const FitConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  SliceGibbs gibbs(model, cfg);
  for (int g = 0; g < cfg.effective_warmup(); ++g) gibbs.sweep();

  PosteriorSamples ps;
  ps.coef.resize(cfg.retained, model.num_coef());
  ps.sigma2.resize(cfg.retained);
  ps.a.resize(cfg.retained);
  for (int g = 0; g < cfg.retained; ++g) {
    gibbs.sweep();
    ps.coef.row(g) = gibbs.coef().transpose();
    ps.sigma2(g) = gibbs.sigma2();
    ps.a(g) = gibbs.a();
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  ps.diagnostics["seconds"] = elapsed.count();
  ps.diagnostics["divergences"] = 0.0;
  ps.diagnostics["mean_accept"] = 1.0;
  return ps;
}

inline PosteriorSamples fit_slice(const GridCounts& gc, const SplineDesign& sd,
                                  const Hyperparameters& hp, const FitConfig& cfg) {
  return fit_slice(PoissonSplineModel(gc, sd, hp), cfg);
}

}  // namespace bayesdens
