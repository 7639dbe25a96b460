#include "bsde/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsde {

namespace detail {

void notaknot_moments(const double* f, std::size_t count, std::size_t stride, double h, double* m,
                      std::size_t m_stride) {
  if (count < 4) throw std::invalid_argument("notaknot_moments: need at least 4 nodes");
  const std::size_t n = count - 1;  // cells
  auto fv = [&](std::size_t i) { return f[i * stride]; };
  auto mv = [&](std::size_t i) -> double& { return m[i * m_stride]; };

  auto d2 = [&](std::size_t j) { return (fv(j + 1) - 2.0 * fv(j) + fv(j - 1)) / (h * h); };

  // With uniform spacing the not-a-knot closure decouples: M_1 and M_{n-1}
  // equal the local second differences, leaving a plain tridiagonal system
  // for the interior moments.
  mv(1) = d2(1);
  mv(n - 1) = d2(n - 1);
  const std::size_t interior = n >= 3 ? n - 3 : 0;  // unknowns M_2 .. M_{n-2}
  if (interior == 1) {
    mv(2) = (6.0 * d2(2) - mv(1) - mv(3)) / 4.0;
  } else if (interior > 1) {
    static thread_local std::vector<double> diag, rhs;
    diag.assign(interior, 4.0);
    rhs.resize(interior);
    for (std::size_t k = 0; k < interior; ++k) rhs[k] = 6.0 * d2(k + 2);
    rhs[0] -= mv(1);
    rhs[interior - 1] -= mv(n - 1);
    for (std::size_t k = 1; k < interior; ++k) {
      double w = 1.0 / diag[k - 1];
      diag[k] -= w;
      rhs[k] -= w * rhs[k - 1];
    }
    mv(n - 2) = rhs[interior - 1] / diag[interior - 1];
    for (std::size_t k = interior - 1; k-- > 0;) mv(k + 2) = (rhs[k] - mv(k + 3)) / diag[k];
  }
  mv(0) = 2.0 * mv(1) - mv(2);
  mv(n) = 2.0 * mv(n - 1) - mv(n - 2);
}

}  // namespace detail

void FieldInterpolant::axis_weights(double u, double h, double w[4]) {
  const double r = u / h;
  w[0] = 1.0 - r;
  w[1] = r;
  w[2] = u * (-h / 3.0 + u * 0.5 - u * u / (6.0 * h));
  w[3] = u * (-h / 6.0 + u * u / (6.0 * h));
}

FieldInterpolant::FieldInterpolant(const SpaceGrid& grid, const SolutionLevel& level,
                                   Extrapolation extrapolation)
    : d_(grid.d), m_(level.m), nf_(level.m * (1 + grid.d)), extrapolation_(extrapolation) {
  if (grid.d != level.d) throw std::invalid_argument("FieldInterpolant: grid/level dimension mismatch");
  if (level.n_nodes != grid.num_nodes())
    throw std::invalid_argument("FieldInterpolant: grid/level size mismatch");
  if (d_ != 1 && d_ != 2)
    throw std::invalid_argument("FieldInterpolant: interpolation implemented for d = 1, 2");

  n_.resize(static_cast<std::size_t>(d_));
  h_.resize(static_cast<std::size_t>(d_));
  lo_.resize(static_cast<std::size_t>(d_));
  for (int a = 0; a < d_; ++a) {
    n_[static_cast<std::size_t>(a)] = grid.n_cells[static_cast<std::size_t>(a)];
    h_[static_cast<std::size_t>(a)] = grid.dx[static_cast<std::size_t>(a)];
    lo_[static_cast<std::size_t>(a)] = grid.lower[static_cast<std::size_t>(a)];
  }

  const std::size_t nodes = level.n_nodes;
  val_.resize(static_cast<std::size_t>(nf_));
  mom_.resize(static_cast<std::size_t>(nf_));
  const std::size_t zs = static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_);
  for (int fidx = 0; fidx < nf_; ++fidx) {
    auto& v = val_[static_cast<std::size_t>(fidx)];
    v.resize(nodes);
    if (fidx < m_) {
      for (std::size_t i = 0; i < nodes; ++i) v[i] = level.y[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(fidx)];
    } else {
      const std::size_t c = static_cast<std::size_t>(fidx - m_);
      for (std::size_t i = 0; i < nodes; ++i) v[i] = level.z[i * zs + c];
    }
  }

  if (d_ == 1) {
    const std::size_t count = static_cast<std::size_t>(n_[0]) + 1;
    for (int fidx = 0; fidx < nf_; ++fidx) {
      auto& mm = mom_[static_cast<std::size_t>(fidx)];
      mm.resize(count);
      detail::notaknot_moments(val_[static_cast<std::size_t>(fidx)].data(), count, 1, h_[0], mm.data(), 1);
    }
    return;
  }

  // d == 2: tensor-product spline moments.
  const std::size_t n0 = static_cast<std::size_t>(n_[0]) + 1;
  const std::size_t n1 = static_cast<std::size_t>(n_[1]) + 1;
  stride_ = n1;
  mom2_.resize(static_cast<std::size_t>(nf_));
  mom12_.resize(static_cast<std::size_t>(nf_));
  for (int fidx = 0; fidx < nf_; ++fidx) {
    const std::size_t k = static_cast<std::size_t>(fidx);
    const double* f = val_[k].data();
    auto& m1 = mom_[k];
    auto& m2 = mom2_[k];
    auto& m12 = mom12_[k];
    m1.resize(n0 * n1);
    m2.resize(n0 * n1);
    m12.resize(n0 * n1);
    for (std::size_t col = 0; col < n1; ++col)  // axis-0 lines
      detail::notaknot_moments(f + col, n0, n1, h_[0], m1.data() + col, n1);
    for (std::size_t row = 0; row < n0; ++row)  // axis-1 lines
      detail::notaknot_moments(f + row * n1, n1, 1, h_[1], m2.data() + row * n1, 1);
    for (std::size_t row = 0; row < n0; ++row)  // axis-1 spline of the axis-0 moments
      detail::notaknot_moments(m1.data() + row * n1, n1, 1, h_[1], m12.data() + row * n1, 1);
  }
}

void FieldInterpolant::resolve(double rho, int axis, int& cell, double w[4]) const {
  const int n = n_[static_cast<std::size_t>(axis)];
  const double h = h_[static_cast<std::size_t>(axis)];
  if (extrapolation_ == Extrapolation::ClampToBoundary) rho = std::clamp(rho, 0.0, static_cast<double>(n));
  cell = static_cast<int>(std::floor(rho));
  cell = std::clamp(cell, 0, n - 1);
  axis_weights((rho - cell) * h, h, w);
}

double FieldInterpolant::eval_field1(int field, double rho) const {
  int cell;
  double w[4];
  resolve(rho, 0, cell, w);
  return eval_fast1(field, cell, w);
}

double FieldInterpolant::eval_field2(int field, double rho1, double rho2) const {
  int c0, c1;
  double wx[4], wy[4];
  resolve(rho1, 0, c0, wx);
  resolve(rho2, 1, c1, wy);
  return eval_fast2(field, c0, c1, wx, wy);
}

void FieldInterpolant::eval(std::span<const double> point, std::span<double> y_out,
                            std::span<double> z_out) const {
  if (static_cast<int>(point.size()) != d_)
    throw std::invalid_argument("FieldInterpolant::eval: point dimension mismatch");
  double r[2] = {0.0, 0.0};
  for (int a = 0; a < d_; ++a)
    r[a] = (point[static_cast<std::size_t>(a)] - lo_[static_cast<std::size_t>(a)]) /
           h_[static_cast<std::size_t>(a)];
  for (int c = 0; c < nf_; ++c) {
    double v = d_ == 1 ? eval_field1(c, r[0]) : eval_field2(c, r[0], r[1]);
    if (c < m_)
      y_out[static_cast<std::size_t>(c)] = v;
    else
      z_out[static_cast<std::size_t>(c - m_)] = v;
  }
}

std::vector<double> FieldInterpolant::node_gradient(int field, int axis) const {
  const std::size_t k = static_cast<std::size_t>(field);
  const double h = h_[static_cast<std::size_t>(axis)];
  std::vector<double> g(val_[k].size());
  auto line_grad = [&](const double* f, const double* m, std::size_t count, std::size_t stride,
                       double* out, std::size_t out_stride) {
    const std::size_t n = count - 1;
    for (std::size_t j = 0; j < n; ++j)
      out[j * out_stride] =
          (f[(j + 1) * stride] - f[j * stride]) / h - h * (2.0 * m[j * stride] + m[(j + 1) * stride]) / 6.0;
    out[n * out_stride] =
        (f[n * stride] - f[(n - 1) * stride]) / h + h * (2.0 * m[n * stride] + m[(n - 1) * stride]) / 6.0;
  };
  if (d_ == 1) {
    line_grad(val_[k].data(), mom_[k].data(), val_[k].size(), 1, g.data(), 1);
    return g;
  }
  const std::size_t n0 = static_cast<std::size_t>(n_[0]) + 1;
  const std::size_t n1 = static_cast<std::size_t>(n_[1]) + 1;
  if (axis == 0) {
    for (std::size_t col = 0; col < n1; ++col)
      line_grad(val_[k].data() + col, mom_[k].data() + col, n0, n1, g.data() + col, n1);
  } else {
    for (std::size_t row = 0; row < n0; ++row)
      line_grad(val_[k].data() + row * n1, mom2_[k].data() + row * n1, n1, 1, g.data() + row * n1, 1);
  }
  return g;
}

}  // namespace bsde
