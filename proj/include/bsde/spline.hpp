#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsde/rational.hpp"

namespace bsde {

/// Interpolant family used to close the spline systems. Line is the K=1
/// degenerate case; the two K=2 options mirror the scheme variants with
/// either a single parabola or a natural cubic; K>=3 always uses not-a-knot.
enum class SplineKind { Line, QuadraticPolynomial, NaturalCubic, NotAKnotCubic };

inline const char* to_string(SplineKind k) {
  switch (k) {
    case SplineKind::Line: return "line";
    case SplineKind::QuadraticPolynomial: return "quadratic";
    case SplineKind::NaturalCubic: return "natural";
    case SplineKind::NotAKnotCubic: return "not-a-knot";
  }
  return "?";
}

inline bool kind_valid_for(SplineKind kind, int k) {
  switch (kind) {
    case SplineKind::Line: return k == 1;
    case SplineKind::QuadraticPolynomial: return k == 2;
    case SplineKind::NaturalCubic: return k == 2;
    case SplineKind::NotAKnotCubic: return k >= 3;
  }
  return false;
}

/// Default kind for a given step count: line for K=1, the configured variant
/// for K=2, not-a-knot above.
inline SplineKind default_kind(int k, SplineKind k2_variant = SplineKind::QuadraticPolynomial) {
  if (k == 1) return SplineKind::Line;
  if (k == 2) return k2_variant;
  return SplineKind::NotAKnotCubic;
}

/// One polynomial piece a + b(s-s0) + c(s-s0)^2 + d(s-s0)^3 on a subinterval
/// of width h, anchored at its left node s0.
template <typename T>
struct CubicPiece {
  T a{}, b{}, c{}, d{};

  T eval(T s) const { return a + s * (b + s * (c + s * d)); }  // s relative to the left node
};

/// Integral of one piece over its full subinterval [0, h].
template <typename T>
T integrate_piece(const CubicPiece<T>& p, T h) {
  T h2 = h * h;
  return p.a * h + p.b * h2 / T(2) + p.c * h2 * h / T(3) + p.d * h2 * h2 / T(4);
}

namespace detail {

// Dense Gaussian elimination with partial (first nonzero) pivoting; sizes are
// at most K+1 so nothing fancier is needed. Works for double and Rational.
template <typename T>
std::vector<T> solve_dense(std::vector<std::vector<T>> A, std::vector<T> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && A[piv][col] == T(0)) ++piv;
    if (piv == n) throw std::runtime_error("spline system is singular");
    std::swap(A[piv], A[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      if (A[row][col] == T(0)) continue;
      T factor = A[row][col] / A[col][col];
      for (std::size_t k = col; k < n; ++k) A[row][k] -= factor * A[col][k];
      rhs[row] -= factor * rhs[col];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = n; i-- > 0;) {
    T s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

template <typename T>
bool finite(const T&) { return true; }
inline bool finite(const double& v) { return std::isfinite(v); }

}  // namespace detail

/// Interpolate K+1 equally spaced support values at nodes 0, h, ..., Kh and
/// return the K cubic pieces. Natural closes with zero second derivatives at
/// both ends; not-a-knot makes the third derivative continuous across the
/// first and last interior nodes; the quadratic variant fits one parabola and
/// rebases it per piece. Exact when instantiated with Rational.
template <typename T>
std::vector<CubicPiece<T>> build_spline(std::span<const T> support, SplineKind kind, T h) {
  const int k = static_cast<int>(support.size()) - 1;
  if (k < 1) throw std::invalid_argument("build_spline: need at least 2 support values");
  if (!kind_valid_for(kind, k))
    throw std::invalid_argument(std::string("build_spline: kind '") + to_string(kind) +
                                "' invalid for K=" + std::to_string(k));
  if (!(h > T(0))) throw std::invalid_argument("build_spline: h must be positive");
  for (const T& v : support)
    if (!detail::finite(v)) throw std::invalid_argument("build_spline: non-finite support value");

  std::vector<CubicPiece<T>> pieces(static_cast<std::size_t>(k));

  if (kind == SplineKind::Line) {
    pieces[0] = {support[0], (support[1] - support[0]) / h, T(0), T(0)};
    return pieces;
  }

  if (kind == SplineKind::QuadraticPolynomial) {
    // Single parabola through the three points, expressed per piece.
    T c = (support[0] - T(2) * support[1] + support[2]) / (T(2) * h * h);
    T b0 = -(T(3) * support[0] - T(4) * support[1] + support[2]) / (T(2) * h);
    T b1 = (support[2] - support[0]) / (T(2) * h);
    pieces[0] = {support[0], b0, c, T(0)};
    pieces[1] = {support[1], b1, c, T(0)};
    return pieces;
  }

  // Cubic spline via the second-derivative (moment) system M_0..M_K.
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  std::vector<std::vector<T>> A(n, std::vector<T>(n, T(0)));
  std::vector<T> rhs(n, T(0));
  for (int j = 1; j < k; ++j) {
    A[j][j - 1] = T(1);
    A[j][j] = T(4);
    A[j][j + 1] = T(1);
    rhs[j] = T(6) * (support[j + 1] - T(2) * support[j] + support[j - 1]) / (h * h);
  }
  if (kind == SplineKind::NaturalCubic) {
    A[0][0] = T(1);
    A[k][k] = T(1);
  } else {  // not-a-knot: M_0 - 2 M_1 + M_2 = 0 and mirrored at the far end
    A[0][0] = T(1); A[0][1] = T(-2); A[0][2] = T(1);
    A[k][k] = T(1); A[k][k - 1] = T(-2); A[k][k - 2] = T(1);
  }
  std::vector<T> m = detail::solve_dense(std::move(A), std::move(rhs));

  for (int j = 0; j < k; ++j) {
    CubicPiece<T>& p = pieces[j];
    p.a = support[j];
    p.b = (support[j + 1] - support[j]) / h - h * (T(2) * m[j] + m[j + 1]) / T(6);
    p.c = m[j] / T(2);
    p.d = (m[j + 1] - m[j]) / (T(6) * h);
  }
  return pieces;
}

template <typename T>
std::vector<CubicPiece<T>> build_spline(const std::vector<T>& support, SplineKind kind, T h) {
  return build_spline(std::span<const T>(support), kind, h);
}

}  // namespace bsde
