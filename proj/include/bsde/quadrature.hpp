#pragma once

#include <functional>
#include <span>
#include <vector>

namespace bsde {

/// Gauss-Hermite rule for integrals against exp(-x^2): sum w_i f(a_i)
/// approximates the integral exactly for polynomials of degree <= 2L-1.
struct HermiteRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes/weights from the symmetric Jacobi matrix of the Hermite recurrence
/// (Golub-Welsch); 1 <= L <= 64. Nodes come out exactly symmetric about 0.
HermiteRule gauss_hermite(int order);

/// d-fold tensor product of a 1-d rule. Nodes are flattened row-major,
/// point i occupying nodes[i*d .. i*d+d).
struct TensorRule {
  int d = 1;
  int order = 0;                 // 1-d order L; point count is L^d
  std::vector<double> nodes;
  std::vector<double> weights;   // products of 1-d weights

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t i) const { return nodes.data() + i * static_cast<std::size_t>(d); }
};

TensorRule tensorize(const HermiteRule& rule, int d);

/// E[phi(W_{t+span}) | W_t = x] under a d-dimensional Brownian transition:
/// pi^{-d/2} sum_L w_L phi(x + sqrt(2*span) * a_L).
double conditional_expectation(const std::function<double(std::span<const double>)>& phi,
                               std::span<const double> x, double span, const TensorRule& rule);

}  // namespace bsde
