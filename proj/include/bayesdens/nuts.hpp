#pragma once

// No-U-turn Hamiltonian Monte Carlo with an identity mass matrix:
// multinomial sampling over a doubling trajectory, the generalized U-turn
// criterion checked across every subtree merge, and dual-averaging step
// size adaptation during warmup.
//
// REFERENCE: Hoffman, M.D. and Gelman, A., 2014. The No-U-Turn sampler:
// adaptively setting path lengths in Hamiltonian Monte Carlo. JMLR 15.
// Betancourt, M., 2017. A conceptual introduction to Hamiltonian Monte Carlo.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

#include "bayesdens/error.hpp"
#include "bayesdens/fit.hpp"
#include "bayesdens/model.hpp"
#include "bayesdens/rng.hpp"

namespace bayesdens {

/// Position, momentum and cached log density/gradient of one phase point.
struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = 0.0;

  double hamiltonian() const { return -log_density + 0.5 * p.squaredNorm(); }
};

/// Evaluates log density and gradient into `z`; a non-finite evaluation
/// leaves log_density at -inf.
template <typename Target>
void evaluate(const Target& target, PhasePoint& z) {
  try {
    z.log_density = target.log_density_gradient(z.q, z.grad);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFiniteResult) throw;
    z.log_density = -std::numeric_limits<double>::infinity();
  }
}

/// One leapfrog step of signed size `eps` (negative integrates backwards).
template <typename Target>
void leapfrog(const Target& target, PhasePoint& z, double eps) {
  z.p += 0.5 * eps * z.grad;
  z.q += eps * z.p;
  evaluate(target, z);
  if (std::isfinite(z.log_density)) z.p += 0.5 * eps * z.grad;
}

/// Dual averaging of log step size toward a target acceptance statistic.
class DualAveraging {
 public:
  DualAveraging(double eps0, double delta, double gamma = 0.05, double t0 = 10.0,
                double kappa = 0.75)
      : mu_(std::log(10.0 * eps0)), delta_(delta), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  /// Feeds one acceptance statistic and returns the next step size to try.
  double update(double accept_stat) {
    ++count_;
    const double m = static_cast<double>(count_);
    const double eta = 1.0 / (m + t0_);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (delta_ - accept_stat);
    const double log_eps = mu_ - std::sqrt(m) / gamma_ * h_bar_;
    const double x_eta = std::pow(m, -kappa_);
    log_eps_bar_ = x_eta * log_eps + (1.0 - x_eta) * log_eps_bar_;
    return std::exp(log_eps);
  }

  double final_step_size() const { return std::exp(log_eps_bar_); }

 private:
  double mu_;
  double delta_;
  double gamma_;
  double t0_;
  double kappa_;
  long count_ = 0;
  double h_bar_ = 0.0;
  double log_eps_bar_ = 0.0;
};

struct NutsTransition {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

template <typename Target>
class NutsSampler {
 public:
  static constexpr double kMaxDeltaH = 1000.0;

  NutsSampler(const Target& target, Eigen::VectorXd q0, double step_size, int max_depth,
              Rng& rng)
      : target_(target), eps_(step_size), max_depth_(max_depth), rng_(rng) {
    z_.q = std::move(q0);
    z_.p = Eigen::VectorXd::Zero(z_.q.size());
    z_.grad.resize(z_.q.size());
    evaluate(target_, z_);
    if (!std::isfinite(z_.log_density)) {
      throw Error(ErrorKind::NonFiniteResult, "initial point has zero density");
    }
  }

  const Eigen::VectorXd& position() const { return z_.q; }
  double step_size() const { return eps_; }
  void set_step_size(double eps) { eps_ = eps; }

  /// Heuristic initial step size: double or halve until the one-step
  /// acceptance probability crosses 1/2.
  void init_step_size() {
    const PhasePoint saved = z_;
    int direction = 0;
    for (int it = 0; it < 100; ++it) {
      z_ = saved;
      for (Eigen::Index i = 0; i < z_.p.size(); ++i) z_.p(i) = rng_.normal();
      const double H0 = z_.hamiltonian();
      leapfrog(target_, z_, eps_);
      double delta_h = H0 - z_.hamiltonian();
      if (!std::isfinite(delta_h)) delta_h = -std::numeric_limits<double>::infinity();
      const int want = delta_h > std::log(0.8) ? 1 : -1;
      if (direction == 0) direction = want;
      if (want != direction) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7 || eps_ < 1e-12) break;
    }
    z_ = saved;
  }

  NutsTransition transition() {
    for (Eigen::Index i = 0; i < z_.p.size(); ++i) z_.p(i) = rng_.normal();
    const double H0 = z_.hamiltonian();

    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    const Eigen::Index n = z_.q.size();
    Eigen::VectorXd p_fwd_fwd = z_.p, p_fwd_bck = z_.p;
    Eigen::VectorXd p_bck_fwd = z_.p, p_bck_bck = z_.p;
    Eigen::VectorXd rho = z_.p;
    double log_sum_weight = 0.0;

    TreeStats stats;
    int depth = 0;
    while (depth < max_depth_) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(n);
      double log_sum_weight_subtree = -std::numeric_limits<double>::infinity();
      bool valid_subtree = false;

      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_fwd;
        PhasePoint z = z_fwd;
        valid_subtree = build_tree(depth, z, z_propose, p_fwd_bck, p_fwd_fwd, rho_fwd, H0,
                                   1.0, log_sum_weight_subtree, stats);
        z_fwd = std::move(z);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_bck;
        PhasePoint z = z_bck;
        valid_subtree = build_tree(depth, z, z_propose, p_bck_fwd, p_bck_bck, rho_bck, H0,
                                   -1.0, log_sum_weight_subtree, stats);
        z_bck = std::move(z);
      }
      if (!valid_subtree) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(p_bck_bck, p_fwd_fwd, rho);
      persist = persist && no_u_turn(p_bck_bck, p_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && no_u_turn(p_bck_fwd, p_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    z_ = z_sample;
    NutsTransition t;
    t.depth = depth;
    t.n_leapfrog = stats.n_leapfrog;
    t.divergent = stats.divergent;
    t.accept_stat = stats.n_leapfrog > 0 ? stats.sum_metro_prob / stats.n_leapfrog : 0.0;
    return t;
  }

 private:
  struct TreeStats {
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    bool divergent = false;
  };

  static double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }

  static bool no_u_turn(const Eigen::VectorXd& p_minus, const Eigen::VectorXd& p_plus,
                        const Eigen::VectorXd& rho) {
    return p_plus.dot(rho) > 0.0 && p_minus.dot(rho) > 0.0;
  }

  // Extends the trajectory from `z` by 2^depth leapfrog steps in direction
  // `sign`. On return `z` is the new trajectory end, `z_propose` the
  // multinomial pick within the subtree, p_beg/p_end its boundary momenta and
  // rho (accumulated) the sum of its momenta.
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, Eigen::VectorXd& rho, double H0, double sign,
                  double& log_sum_weight, TreeStats& stats) {
    if (depth == 0) {
      leapfrog(target_, z, sign * eps_);
      ++stats.n_leapfrog;
      double h = z.hamiltonian();
      if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
      if (h - H0 > kMaxDeltaH) stats.divergent = true;
      log_sum_weight = log_sum_exp(log_sum_weight, H0 - h);
      stats.sum_metro_prob += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
      z_propose = z;
      p_beg = z.p;
      p_end = z.p;
      rho += z.p;
      return !stats.divergent;
    }

    const Eigen::Index n = z.q.size();
    Eigen::VectorXd p_init_end(n);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(n);
    double log_sum_weight_init = -std::numeric_limits<double>::infinity();
    if (!build_tree(depth - 1, z, z_propose, p_beg, p_init_end, rho_init, H0, sign,
                    log_sum_weight_init, stats)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    Eigen::VectorXd p_final_beg(n);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(n);
    double log_sum_weight_final = -std::numeric_limits<double>::infinity();
    if (!build_tree(depth - 1, z, z_propose_final, p_final_beg, p_end, rho_final, H0, sign,
                    log_sum_weight_final, stats)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = std::move(z_propose_final);
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = std::move(z_propose_final);
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_u_turn(p_beg, p_end, rho_subtree);
    persist = persist && no_u_turn(p_beg, p_final_beg, rho_init + p_final_beg);
    persist = persist && no_u_turn(p_init_end, p_end, rho_final + p_init_end);
    return persist;
  }

  const Target& target_;
  PhasePoint z_;
  double eps_;
  int max_depth_;
  Rng& rng_;
};

inline PosteriorSamples fit_nuts(const PoissonSplineModel& model, const FitConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);

  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(model.dim());
  q0(0) = std::log(model.counts().mean() + 0.1);
  NutsSampler<PoissonSplineModel> sampler(model, q0, 1.0, cfg.nuts_max_depth, rng);
  sampler.init_step_size();

  DualAveraging adapt(sampler.step_size(), cfg.nuts_target_accept);
  const int warmup = cfg.effective_warmup();
  for (int g = 0; g < warmup; ++g) {
    const NutsTransition t = sampler.transition();
    sampler.set_step_size(adapt.update(t.accept_stat));
  }
  if (warmup > 0) sampler.set_step_size(adapt.final_step_size());

  const Eigen::Index p = model.num_coef();
  PosteriorSamples ps;
  ps.coef.resize(cfg.retained, p);
  ps.sigma2.resize(cfg.retained);
  ps.a.resize(cfg.retained);
  int divergences = 0;
  double accept_sum = 0.0;
  double leapfrog_sum = 0.0;
  for (int g = 0; g < cfg.retained; ++g) {
    const NutsTransition t = sampler.transition();
    divergences += t.divergent ? 1 : 0;
    accept_sum += t.accept_stat;
    leapfrog_sum += t.n_leapfrog;
    const Eigen::VectorXd& q = sampler.position();
    ps.coef.row(g) = q.head(p).transpose();
    ps.sigma2(g) = std::exp(q(p));
    ps.a(g) = std::exp(q(p + 1));
  }
  if (divergences * 10 > cfg.retained) {
    throw Error(ErrorKind::DivergenceLimit,
                std::to_string(divergences) + " divergent transitions after warmup");
  }
  if (!ps.coef.allFinite() || !ps.sigma2.allFinite() || !ps.a.allFinite()) {
    throw Error(ErrorKind::NonFiniteResult, "non-finite posterior draw");
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  ps.diagnostics["seconds"] = elapsed.count();
  ps.diagnostics["divergences"] = divergences;
  ps.diagnostics["mean_accept"] = accept_sum / cfg.retained;
  ps.diagnostics["step_size"] = sampler.step_size();
  ps.diagnostics["mean_leapfrog"] = leapfrog_sum / cfg.retained;
  return ps;
}

inline PosteriorSamples fit_nuts(const GridCounts& gc, const SplineDesign& sd,
                                 const Hyperparameters& hp, const FitConfig& cfg) {
  return fit_nuts(PoissonSplineModel(gc, sd, hp), cfg);
}

}  // namespace bayesdens
