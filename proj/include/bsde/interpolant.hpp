#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsde/space_grid.hpp"

namespace bsde {

/// Behaviour outside the truncated domain: evaluate the boundary piece's
/// polynomial extension (default, continuous and smooth at the boundary)
/// or clamp the query to the boundary value.
enum class Extrapolation { PolynomialExtension, ClampToBoundary };

/// Not-a-knot cubic spline interpolant of one solution level, tensor-product
/// in d=2. Stores node values plus spline second-derivative (moment) arrays
/// per field; evaluation is O(1) per query. Fields are ordered y components
/// first, then z components (m*d of them).
class FieldInterpolant {
 public:
  FieldInterpolant(const SpaceGrid& grid, const SolutionLevel& level,
                   Extrapolation extrapolation = Extrapolation::PolynomialExtension);

  int num_fields() const { return nf_; }
  int dim() const { return d_; }

  /// Evaluate every component at a point: y_out has m entries, z_out m*d.
  void eval(std::span<const double> point, std::span<double> y_out,
            std::span<double> z_out) const;

  /// Single-field evaluation with the query in index units rho = (x-lower)/dx.
  double eval_field1(int field, double rho) const;
  double eval_field2(int field, double rho1, double rho2) const;

  /// Cubic evaluation weights for (value0, value1, moment0, moment1) on a
  /// cell of width h at local offset u (u may lie outside [0, h] when
  /// extending the boundary piece).
  static void axis_weights(double u, double h, double w[4]);

  /// Fast path: cell indices already resolved and in range, weights
  /// precomputed by axis_weights.
  double eval_fast1(int field, int cell, const double w[4]) const {
    const double* f = val_[static_cast<std::size_t>(field)].data() + cell;
    const double* m = mom_[static_cast<std::size_t>(field)].data() + cell;
    return w[0] * f[0] + w[1] * f[1] + w[2] * m[0] + w[3] * m[1];
  }
  double eval_fast2(int field, int cell0, int cell1, const double wx[4], const double wy[4]) const {
    const std::size_t base = static_cast<std::size_t>(cell0) * stride_ + static_cast<std::size_t>(cell1);
    const std::size_t k = static_cast<std::size_t>(field);
    const double* f = val_[k].data() + base;
    const double* m1 = mom_[k].data() + base;          // d^2/dx0^2
    const double* m2 = mom2_[k].data() + base;         // d^2/dx1^2
    const double* m12 = mom12_[k].data() + base;       // mixed
    const std::size_t s = stride_;
    double a0 = wy[0] * f[0] + wy[1] * f[1] + wy[2] * m2[0] + wy[3] * m2[1];
    double a1 = wy[0] * f[s] + wy[1] * f[s + 1] + wy[2] * m2[s] + wy[3] * m2[s + 1];
    double b0 = wy[0] * m1[0] + wy[1] * m1[1] + wy[2] * m12[0] + wy[3] * m12[1];
    double b1 = wy[0] * m1[s] + wy[1] * m1[s + 1] + wy[2] * m12[s] + wy[3] * m12[s + 1];
    return wx[0] * a0 + wx[1] * a1 + wx[2] * b0 + wx[3] * b1;
  }

  /// Spline gradient of a field along one axis, evaluated at every node.
  std::vector<double> node_gradient(int field, int axis) const;

  int cells(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double cell_width(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
  Extrapolation extrapolation() const { return extrapolation_; }

 private:
  void resolve(double rho, int axis, int& cell, double w[4]) const;

  int d_ = 1;
  int m_ = 1;
  int nf_ = 1;
  std::size_t stride_ = 1;  // d=2: distance between consecutive axis-0 rows
  std::vector<int> n_;      // cells per axis
  std::vector<double> h_;   // dx per axis
  std::vector<double> lo_;  // lower bound per axis
  Extrapolation extrapolation_ = Extrapolation::PolynomialExtension;

  std::vector<std::vector<double>> val_;    // per field, contiguous copy
  std::vector<std::vector<double>> mom_;    // d=1: spline moments; d=2: axis-0 moments
  std::vector<std::vector<double>> mom2_;   // d=2 only: axis-1 moments
  std::vector<std::vector<double>> mom12_;  // d=2 only: mixed moments
};

namespace detail {
/// Not-a-knot spline moments of uniformly spaced values (strided access);
/// count >= 4 nodes. Exposed for tests.
void notaknot_moments(const double* f, std::size_t count, std::size_t stride, double h, double* m,
                      std::size_t m_stride);
}  // namespace detail

}  // namespace bsde
