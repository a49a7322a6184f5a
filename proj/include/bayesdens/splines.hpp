#pragma once

// Cubic B-splines on [0, 1] and the canonical O'Sullivan basis built from
// them: a reparametrization in which the integrated squared second
// derivative penalty becomes the identity on the spline coefficients.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bayesdens/error.hpp"
#include "bayesdens/jacobi.hpp"

namespace bayesdens {

inline constexpr int kSplineDegree = 3;
inline constexpr std::size_t kDefaultNumBasis = 50;
inline constexpr double kNullSpaceTol = 1e-10;

/// Clamped cubic knot sequence with K-2 equally spaced interior knots, which
/// yields K+2 B-splines and K canonical basis functions.
inline std::vector<double> default_knots(std::size_t K) {
  if (K < 5) {
    throw Error(ErrorKind::BadBasisSize,
                "number of basis functions must be at least 5, got " + std::to_string(K));
  }
  const std::size_t interior = K - 2;
  std::vector<double> knots(interior + 2 * (kSplineDegree + 1));
  std::size_t i = 0;
  for (int r = 0; r <= kSplineDegree; ++r) knots[i++] = 0.0;
  for (std::size_t j = 1; j <= interior; ++j) {
    knots[i++] = static_cast<double>(j) / static_cast<double>(interior + 1);
  }
  for (int r = 0; r <= kSplineDegree; ++r) knots[i++] = 1.0;
  return knots;
}

inline std::size_t num_bsplines(std::span<const double> knots) {
  return knots.size() - kSplineDegree - 1;
}

namespace detail {

/// Index of the knot span [t_s, t_{s+1}) containing x; the right end point
/// belongs to the last non-empty span.
inline std::size_t find_span(std::span<const double> knots, double x) {
  const std::size_t nb = num_bsplines(knots);
  if (x >= knots[nb]) return nb - 1;
  const auto it = std::upper_bound(knots.begin() + kSplineDegree,
                                   knots.begin() + static_cast<std::ptrdiff_t>(nb), x);
  return static_cast<std::size_t>(it - knots.begin()) - 1;
}

/// Values and first `nd` derivatives of the degree+1 B-splines that are
/// nonzero on `span`, evaluated at x by the triangular recurrence.
/// ders[d][r] belongs to B-spline number span - degree + r.
inline std::array<std::array<double, kSplineDegree + 1>, 3>
basis_derivatives(std::span<const double> t, std::size_t span, double x, int nd) {
  constexpr int p = kSplineDegree;
  std::array<std::array<double, p + 1>, p + 1> ndu{};
  std::array<double, p + 1> left{};
  std::array<double, p + 1> right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  std::array<std::array<double, p + 1>, 3> ders{};
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  std::array<std::array<double, p + 1>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  int factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= p - k;
  }
  return ders;
}

}  // namespace detail

/// |x| x (K+2) matrix of cubic B-spline values; each row sums to one.
inline Eigen::MatrixXd bspline_design(std::span<const double> x,
                                      std::span<const double> knots) {
  const std::size_t nb = num_bsplines(knots);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()),
                                            static_cast<Eigen::Index>(nb));
  const double lo = knots.front();
  const double hi = knots.back();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo && x[i] <= hi)) {
      throw Error(ErrorKind::OutOfRange, "spline evaluation point outside knot range");
    }
    const std::size_t span = detail::find_span(knots, x[i]);
    const auto ders = detail::basis_derivatives(knots, span, x[i], 0);
    for (int r = 0; r <= kSplineDegree; ++r) {
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(span - kSplineDegree + r)) =
          ders[0][r];
    }
  }
  return B;
}

/// Omega_jk = integral over [0,1] of B_j''(x) B_k''(x).
///
/// Second derivatives of cubic B-splines are linear between knots, so the
/// integrand is quadratic there and Simpson's rule on each inter-knot
/// interval is exact.
inline Eigen::MatrixXd omega_penalty(std::span<const double> knots) {
  const std::size_t nb = num_bsplines(knots);
  const auto n = static_cast<Eigen::Index>(nb);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t span = kSplineDegree; span < nb; ++span) {
    const double a = knots[span];
    const double b = knots[span + 1];
    if (!(b > a)) continue;
    const std::array<double, 3> nodes{a, 0.5 * (a + b), b};
    const std::array<double, 3> weights{(b - a) / 6.0, 4.0 * (b - a) / 6.0, (b - a) / 6.0};
    for (int q = 0; q < 3; ++q) {
      const auto ders = detail::basis_derivatives(knots, span, nodes[q], 2);
      const auto base = static_cast<Eigen::Index>(span - kSplineDegree);
      for (int r = 0; r <= kSplineDegree; ++r) {
        for (int s = 0; s <= kSplineDegree; ++s) {
          omega(base + r, base + s) += weights[q] * ders[2][r] * ders[2][s];
        }
      }
    }
  }
  return omega;
}

/// Canonical O'Sullivan spline design on a fixed set of abscissae.
struct SplineDesign {
  std::size_t K = 0;
  std::vector<double> knots;
  Eigen::MatrixXd canonical_transform;  // (K+2) x K
  Eigen::MatrixXd design;               // M x (2+K), rows (1, g, z_1(g), ..., z_K(g))

  std::size_t num_coef() const { return K + 2; }

  /// Rows (1, x, z_1(x), ..., z_K(x)) at arbitrary points of [0, 1].
  Eigen::MatrixXd evaluate(std::span<const double> x) const {
    const Eigen::MatrixXd Z = bspline_design(x, knots) * canonical_transform;
    Eigen::MatrixXd C(Z.rows(), static_cast<Eigen::Index>(K + 2));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      C(i, 0) = 1.0;
      C(i, 1) = x[static_cast<std::size_t>(i)];
    }
    C.rightCols(static_cast<Eigen::Index>(K)) = Z;
    return C;
  }
};

/// Whitening transform: eigenvectors of Omega with non-null eigenvalues,
/// scaled by the inverse square roots of those eigenvalues.
inline Eigen::MatrixXd canonical_transform(const Eigen::MatrixXd& omega) {
  const SymmetricEigen eig = jacobi_eigen(omega);
  const Eigen::Index n = omega.rows();
  const double largest = eig.values(n - 1);
  if (!(largest > 0.0)) {
    throw Error(ErrorKind::RankDeficient, "penalty matrix has no positive eigenvalue");
  }
  const double cutoff = kNullSpaceTol * largest;
  Eigen::Index first = 0;
  while (first < n && eig.values(first) <= cutoff) ++first;
  const Eigen::Index rank = n - first;
  if (rank != n - 2) {
    throw Error(ErrorKind::RankDeficient,
                "penalty rank " + std::to_string(rank) + ", expected " + std::to_string(n - 2));
  }
  Eigen::MatrixXd T = eig.vectors.rightCols(rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    T.col(j) /= std::sqrt(eig.values(first + j));
  }
  return T;
}

inline SplineDesign canonical_basis(std::span<const double> x,
                                    std::vector<double> knots) {
  SplineDesign sd;
  const Eigen::MatrixXd omega = omega_penalty(knots);
  sd.canonical_transform = canonical_transform(omega);
  sd.K = static_cast<std::size_t>(sd.canonical_transform.cols());
  sd.knots = std::move(knots);
  sd.design = sd.evaluate(x);
  return sd;
}

/// Default construction: K canonical functions on equally spaced knots.
inline SplineDesign make_spline_design(std::span<const double> x,
                                       std::size_t K = kDefaultNumBasis) {
  if (K + 2 > x.size()) {
    throw Error(ErrorKind::BadBasisSize, "need at least K+2 design points");
  }
  return canonical_basis(x, default_knots(K));
}

}  // namespace bayesdens
