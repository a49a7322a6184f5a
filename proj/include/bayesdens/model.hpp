#pragma once

// Poisson penalized-spline mixed model on binned counts:
//
//   c_l ~ Poisson(exp(h_l' theta)),  theta = (beta0, beta1, u_1..u_K)
//   beta0, beta1 ~ N(0, sigma_beta^2),  u_k | sigma2 ~ N(0, sigma2)
//   sigma2 | a ~ Inverse-Gamma(1/2, 1/a),  a ~ Inverse-Gamma(1/2, 1/s_sigma^2)
//
// Inverse-Gamma(shape, rate) has density proportional to v^{-shape-1} e^{-rate/v};
// under this convention sigma has a Half-Cauchy(s_sigma) prior.
// Gradient-based samplers work on q = (theta, log sigma2, log a).

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "bayesdens/error.hpp"
#include "bayesdens/preprocessing.hpp"
#include "bayesdens/splines.hpp"

namespace bayesdens {

struct Hyperparameters {
  double sigma_beta = 1000.0;
  double s_sigma = 1000.0;

  void validate() const {
    if (!(sigma_beta > 0.0 && std::isfinite(sigma_beta) && s_sigma > 0.0 &&
          std::isfinite(s_sigma))) {
      throw Error(ErrorKind::BadConfig, "hyperparameters must be positive and finite");
    }
  }
};

struct ParamState {
  double beta0 = 0.0;
  double beta1 = 0.0;
  Eigen::VectorXd u;
  double sigma2 = 1.0;
  double a = 1.0;
};

struct UnconstrainedState {
  Eigen::VectorXd theta;  // (beta0, beta1, u)
  double omega = 0.0;     // log sigma2
  double b = 0.0;         // log a
};

inline UnconstrainedState to_unconstrained(const ParamState& p) {
  UnconstrainedState s;
  s.theta.resize(p.u.size() + 2);
  s.theta << p.beta0, p.beta1, p.u;
  s.omega = std::log(p.sigma2);
  s.b = std::log(p.a);
  return s;
}

inline ParamState to_constrained(const UnconstrainedState& s) {
  ParamState p;
  p.beta0 = s.theta(0);
  p.beta1 = s.theta(1);
  p.u = s.theta.tail(s.theta.size() - 2);
  p.sigma2 = std::exp(s.omega);
  p.a = std::exp(s.b);
  return p;
}

/// Log posterior (up to a constant) and its gradient in the flat
/// unconstrained coordinates q = (theta, omega, b).
class PoissonSplineModel {
 public:
  PoissonSplineModel(const Eigen::MatrixXd& design, std::span<const double> counts,
                     Hyperparameters hp)
      : C_(design),
        c_(Eigen::Map<const Eigen::VectorXd>(counts.data(),
                                             static_cast<Eigen::Index>(counts.size()))),
        hp_(hp) {
    if (C_.rows() != c_.size() || C_.cols() < 3) {
      throw Error(ErrorKind::BadConfig, "design and counts dimensions disagree");
    }
    hp_.validate();
    Ctc_ = C_.transpose() * c_;
  }

  PoissonSplineModel(const GridCounts& gc, const SplineDesign& sd, Hyperparameters hp)
      : PoissonSplineModel(sd.design, gc.counts, hp) {}

  Eigen::Index num_coef() const { return C_.cols(); }
  Eigen::Index num_spline() const { return C_.cols() - 2; }
  Eigen::Index dim() const { return C_.cols() + 2; }
  const Eigen::MatrixXd& design() const { return C_; }
  const Eigen::VectorXd& counts() const { return c_; }
  const Eigen::VectorXd& design_counts() const { return Ctc_; }
  const Hyperparameters& hyper() const { return hp_; }

  double log_density(const Eigen::VectorXd& q) const {
    return evaluate(q, nullptr);
  }

  double log_density_gradient(const Eigen::VectorXd& q, Eigen::VectorXd& grad) const {
    grad.resize(dim());
    return evaluate(q, &grad);
  }

 private:
  double evaluate(const Eigen::VectorXd& q, Eigen::VectorXd* grad) const {
    const Eigen::Index p = num_coef();
    const Eigen::Index K = num_spline();
    const auto theta = q.head(p);
    const double omega = q(p);
    const double b = q(p + 1);
    const auto u = theta.tail(K);

    const Eigen::VectorXd eta = C_ * theta;
    const Eigen::VectorXd mu = eta.array().exp();
    const double sb2 = hp_.sigma_beta * hp_.sigma_beta;
    const double ss2 = hp_.s_sigma * hp_.s_sigma;
    const double inv_sigma2 = std::exp(-omega);
    const double inv_sigma2_a = std::exp(-omega - b);
    const double inv_a = std::exp(-b);
    const double usq = u.squaredNorm();

    const double lp = Ctc_.dot(theta) - mu.sum() -
                      (theta(0) * theta(0) + theta(1) * theta(1)) / (2.0 * sb2) -
                      0.5 * static_cast<double>(K + 1) * omega - 0.5 * inv_sigma2 * usq - b -
                      inv_sigma2_a - inv_a / ss2;
    if (!std::isfinite(lp)) {
      throw Error(ErrorKind::NonFiniteResult, "log posterior is not finite");
    }
    if (grad != nullptr) {
      Eigen::VectorXd& g = *grad;
      g.head(p).noalias() = C_.transpose() * (c_ - mu);
      g(0) -= theta(0) / sb2;
      g(1) -= theta(1) / sb2;
      g.segment(2, K) -= inv_sigma2 * u;
      g(p) = -0.5 * static_cast<double>(K + 1) + 0.5 * inv_sigma2 * usq + inv_sigma2_a;
      g(p + 1) = -1.0 + inv_sigma2_a + inv_a / ss2;
      if (!g.allFinite()) {
        throw Error(ErrorKind::NonFiniteResult, "log posterior gradient is not finite");
      }
    }
    return lp;
  }

  Eigen::MatrixXd C_;
  Eigen::VectorXd c_;
  Eigen::VectorXd Ctc_;
  Hyperparameters hp_;
};

inline Eigen::VectorXd flatten(const UnconstrainedState& s) {
  Eigen::VectorXd q(s.theta.size() + 2);
  q << s.theta, s.omega, s.b;
  return q;
}

inline UnconstrainedState unflatten(const Eigen::VectorXd& q) {
  const Eigen::Index p = q.size() - 2;
  return {q.head(p), q(p), q(p + 1)};
}

inline double log_posterior(const UnconstrainedState& state, const GridCounts& gc,
                            const SplineDesign& sd, const Hyperparameters& hp) {
  return PoissonSplineModel(gc, sd, hp).log_density(flatten(state));
}

inline Eigen::VectorXd grad_log_posterior(const UnconstrainedState& state,
                                          const GridCounts& gc, const SplineDesign& sd,
                                          const Hyperparameters& hp) {
  Eigen::VectorXd g;
  PoissonSplineModel(gc, sd, hp).log_density_gradient(flatten(state), g);
  return g;
}

}  // namespace bayesdens
