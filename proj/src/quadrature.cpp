#include "bsde/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bsde {

HermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 64) throw std::invalid_argument("gauss_hermite: order must be in [1, 64]");
  HermiteRule rule;
  rule.order = order;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {sqrt_pi};
    return rule;
  }

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolver failed");

  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);  // ascending
    double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = sqrt_pi * v0 * v0;
  }

  // Enforce the exact +/- symmetry of the rule.
  for (int i = 0, j = order - 1; i < j; ++i, --j) {
    double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = weight;
    rule.weights[j] = weight;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

TensorRule tensorize(const HermiteRule& rule, int d) {
  if (d < 1) throw std::invalid_argument("tensorize: dimension must be positive");
  const int order = rule.order;
  std::size_t count = 1;
  for (int k = 0; k < d; ++k) count *= static_cast<std::size_t>(order);

  TensorRule t;
  t.d = d;
  t.order = order;
  t.nodes.resize(count * static_cast<std::size_t>(d));
  t.weights.assign(count, 1.0);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t i = 0; i < count; ++i) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      t.nodes[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
          rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    }
    t.weights[i] = w;
    for (int k = d - 1; k >= 0; --k) {  // odometer, last axis fastest
      if (++idx[static_cast<std::size_t>(k)] < order) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return t;
}

double conditional_expectation(const std::function<double(std::span<const double>)>& phi,
                               std::span<const double> x, double span, const TensorRule& rule) {
  if (!(span > 0.0)) throw std::invalid_argument("conditional_expectation: span must be positive");
  const int d = rule.d;
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("conditional_expectation: point dimension mismatch");
  const double scale = std::sqrt(2.0 * span);
  std::vector<double> pt(static_cast<std::size_t>(d));
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double* a = rule.point(i);
    for (int k = 0; k < d; ++k) pt[static_cast<std::size_t>(k)] = x[k] + scale * a[k];
    acc += rule.weights[i] * phi(pt);
  }
  return acc / std::pow(std::numbers::pi, d / 2.0);
}

}  // namespace bsde
