#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bayesdens/error.hpp"
#include "bayesdens/evaluation.hpp"
#include "bayesdens/model.hpp"
#include "bayesdens/preprocessing.hpp"
#include "bayesdens/rng.hpp"
#include "bayesdens/splines.hpp"

using namespace bayesdens;

namespace {

struct SmallProblem {
  GridCounts gc;
  SplineDesign sd;
  Hyperparameters hp;
};

// K = 5, M = 21, n = 200 draws from mw8 mapped to the unit interval.
SmallProblem small_problem(std::uint64_t seed = 1) {
  Rng rng(seed);
  const auto x = mixture_sample(mw8(), 200, rng);
  const auto spec = fit_transform(x);
  SmallProblem p;
  p.gc = linear_bin(apply_transform(spec, x, Direction::Forward), 21);
  p.sd = make_spline_design(p.gc.grid, 5);
  return p;
}

Eigen::VectorXd random_state(Rng& rng, Eigen::Index dim) {
  Eigen::VectorXd q(dim);
  for (Eigen::Index i = 0; i < dim; ++i) q(i) = 0.5 * rng.normal();
  q(0) += 1.5;
  q(dim - 2) = rng.normal();
  q(dim - 1) = rng.normal();
  return q;
}

Eigen::VectorXd central_difference(const PoissonSplineModel& m, const Eigen::VectorXd& q,
                                   double h) {
  Eigen::VectorXd g(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    Eigen::VectorXd up = q, dn = q;
    up(i) += h;
    dn(i) -= h;
    g(i) = (m.log_density(up) - m.log_density(dn)) / (2.0 * h);
  }
  return g;
}

double inverse_gamma_log_pdf(double v, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - rate / v;
}

}  // namespace

TEST(LogPosterior, ZeroPredictorZeroCounts) {
  const auto p = small_problem();
  GridCounts zero = p.gc;
  std::fill(zero.counts.begin(), zero.counts.end(), 0.0);
  UnconstrainedState s{Eigen::VectorXd::Zero(7), 0.0, 0.0};
  // remaining prior terms at theta = 0, omega = 0, b = 0: -e^0 - 1/s^2
  const double prior = -1.0 - 1.0 / (p.hp.s_sigma * p.hp.s_sigma);
  EXPECT_NEAR(log_posterior(s, zero, p.sd, p.hp), -21.0 + prior, 1e-12);
}

TEST(LogPosterior, VarianceDoublingMatchesClosedForm) {
  const auto p = small_problem();
  Rng rng(4);
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd q = random_state(rng, m.dim());
    UnconstrainedState s = unflatten(q);
    UnconstrainedState s2 = s;
    s2.omega += std::log(2.0);
    const double K = 5.0;
    const double usq = s.theta.tail(5).squaredNorm();
    const double sigma2 = std::exp(s.omega);
    const double a = std::exp(s.b);
    const double expect = -0.5 * (K + 1.0) * std::log(2.0) - usq / (2.0 * 2.0 * sigma2) +
                          usq / (2.0 * sigma2) - 1.0 / (2.0 * sigma2 * a) + 1.0 / (sigma2 * a);
    EXPECT_NEAR(log_posterior(s2, p.gc, p.sd, p.hp) - log_posterior(s, p.gc, p.sd, p.hp), expect,
                1e-9);
  }
}

TEST(LogPosterior, SigmaConditionalIsInverseGamma) {
  const auto p = small_problem();
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  Rng rng(9);
  Eigen::VectorXd q = random_state(rng, m.dim());
  const Eigen::Index iw = m.dim() - 2;
  const double usq = q.segment(2, 5).squaredNorm();
  const double a = std::exp(q(iw + 1));
  const double shape = 3.0;  // (K + 1) / 2
  const double rate = 0.5 * usq + 1.0 / a;

  // density of omega = log sigma2 from the posterior, normalized numerically
  const int N = 40001;
  const double lo = -20.0, hi = 20.0, h = (hi - lo) / (N - 1);
  std::vector<double> logf(N);
  double peak = -INFINITY;
  for (int i = 0; i < N; ++i) {
    q(iw) = lo + h * i;
    logf[static_cast<std::size_t>(i)] = m.log_density(q);
    peak = std::max(peak, logf[static_cast<std::size_t>(i)]);
  }
  double Z = 0.0;
  for (int i = 0; i < N; ++i) Z += (i == 0 || i == N - 1 ? 0.5 : 1.0) * h * std::exp(logf[static_cast<std::size_t>(i)] - peak);
  for (int i = 0; i < N; i += 97) {
    const double omega = lo + h * i;
    const double f = std::exp(logf[static_cast<std::size_t>(i)] - peak) / Z;
    const double sigma2 = std::exp(omega);
    const double ig = std::exp(inverse_gamma_log_pdf(sigma2, shape, rate)) * sigma2;
    EXPECT_NEAR(f, ig, 1e-8) << "omega=" << omega;
  }
}

TEST(LogPosterior, AuxiliaryConditionalIsInverseGamma) {
  const auto p = small_problem();
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  Rng rng(10);
  Eigen::VectorXd q = random_state(rng, m.dim());
  const Eigen::Index ib = m.dim() - 1;
  const double sigma2 = std::exp(q(ib - 1));
  const double rate = 1.0 / sigma2 + 1.0 / (p.hp.s_sigma * p.hp.s_sigma);

  const int N = 40001;
  const double lo = -25.0, hi = 20.0, h = (hi - lo) / (N - 1);
  std::vector<double> logf(N);
  double peak = -INFINITY;
  for (int i = 0; i < N; ++i) {
    q(ib) = lo + h * i;
    logf[static_cast<std::size_t>(i)] = m.log_density(q);
    peak = std::max(peak, logf[static_cast<std::size_t>(i)]);
  }
  double Z = 0.0;
  for (int i = 0; i < N; ++i) Z += (i == 0 || i == N - 1 ? 0.5 : 1.0) * h * std::exp(logf[static_cast<std::size_t>(i)] - peak);
  for (int i = 0; i < N; i += 101) {
    const double a = std::exp(lo + h * i);
    const double f = std::exp(logf[static_cast<std::size_t>(i)] - peak) / Z;
    EXPECT_NEAR(f, std::exp(inverse_gamma_log_pdf(a, 1.0, rate)) * a, 1e-8);
  }
}

TEST(GradLogPosterior, MatchesFiniteDifferences) {
  const auto p = small_problem();
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  Rng rng(123);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd q = random_state(rng, m.dim());
    const Eigen::VectorXd g = grad_log_posterior(unflatten(q), p.gc, p.sd, p.hp);
    const Eigen::VectorXd fd = central_difference(m, q, 1e-5);
    const double rel = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    EXPECT_LE(rel, 1e-6) << "state " << t;
  }
}

TEST(GradLogPosterior, AuxiliaryLimit) {
  const auto p = small_problem();
  UnconstrainedState s{Eigen::VectorXd::Zero(7), 0.0, 40.0};
  s.theta(0) = 1.0;
  const Eigen::VectorXd g = grad_log_posterior(s, p.gc, p.sd, p.hp);
  EXPECT_NEAR(g(8), -1.0, 1e-12);
}

TEST(GradLogPosterior, VanishesAtCoordinateAscentMode) {
  const auto p = small_problem();
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  const Eigen::MatrixXd& C = m.design();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(m.dim());
  q(0) = std::log(m.counts().mean() + 0.1);
  const double K = 5.0;
  const double ss2 = p.hp.s_sigma * p.hp.s_sigma;
  Eigen::VectorXd g;
  for (int sweep = 0; sweep < 500; ++sweep) {
    // Newton steps in theta with the variances held fixed
    for (int it = 0; it < 20; ++it) {
      m.log_density_gradient(q, g);
      const Eigen::VectorXd mu = (C * q.head(7)).array().exp();
      Eigen::MatrixXd H = C.transpose() * mu.asDiagonal() * C;
      H(0, 0) += 1.0 / (p.hp.sigma_beta * p.hp.sigma_beta);
      H(1, 1) += 1.0 / (p.hp.sigma_beta * p.hp.sigma_beta);
      H.diagonal().tail(5).array() += std::exp(-q(7));
      q.head(7) += H.ldlt().solve(g.head(7));
    }
    // closed-form maximizers for b and omega
    q(8) = std::log(std::exp(-q(7)) + 1.0 / ss2);
    q(7) = std::log((0.5 * q.segment(2, 5).squaredNorm() + std::exp(-q(8))) / (0.5 * (K + 1.0)));
  }
  m.log_density_gradient(q, g);
  EXPECT_LE(g.norm(), 1e-6);
}

TEST(LogPosterior, ConcaveInCoefficients) {
  const auto p = small_problem();
  const PoissonSplineModel m(p.gc, p.sd, p.hp);
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd q = random_state(rng, m.dim());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m.dim());
    for (int i = 0; i < 7; ++i) d(i) = rng.normal();
    const double h = 1e-4;
    Eigen::VectorXd gp, gm;
    m.log_density_gradient(q + h * d, gp);
    m.log_density_gradient(q - h * d, gm);
    EXPECT_LT(d.dot(gp - gm) / (2.0 * h), 0.0);
  }
}

TEST(LogPosterior, OverflowIsReported) {
  const auto p = small_problem();
  UnconstrainedState s{Eigen::VectorXd::Zero(7), 0.0, 0.0};
  s.theta(0) = 800.0;
  try {
    log_posterior(s, p.gc, p.sd, p.hp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteResult);
  }
}

TEST(ParamState, UnconstrainedRoundTrip) {
  ParamState ps;
  ps.beta0 = 0.3;
  ps.beta1 = -1.2;
  ps.u = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  ps.sigma2 = 2.5;
  ps.a = 0.04;
  const ParamState back = to_constrained(to_unconstrained(ps));
  EXPECT_DOUBLE_EQ(back.beta0, ps.beta0);
  EXPECT_DOUBLE_EQ(back.beta1, ps.beta1);
  EXPECT_TRUE(back.u.isApprox(ps.u));
  EXPECT_NEAR(back.sigma2, ps.sigma2, 1e-14);
  EXPECT_NEAR(back.a, ps.a, 1e-16);
}
