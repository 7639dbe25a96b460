#include "bsde/stability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsde/scheme_weights.hpp"

namespace bsde {

std::complex<double> CharPoly::eval(std::complex<double> lambda) const {
  std::complex<double> v = 0.0;
  for (double c : coeffs) v = v * lambda + c;
  return v;
}

CharPoly characteristic_polynomial(int k_z, int l, SplineKind kind) {
  ZWeights w = derive_z_weights(k_z, l, kind);

  // Assemble in exact arithmetic, descending powers lambda^{K_z} .. lambda^0;
  // index j holds the coefficient of lambda^{K_z-j}.
  std::vector<Rational> c(static_cast<std::size_t>(k_z) + 1, Rational(0));
  for (int j = 0; j <= k_z; ++j) c[j] -= w.gamma[j];
  c[l] += Rational(1);  // the lambda^{K_z-l} term

  std::size_t lead = 0;
  while (lead < c.size() && c[lead] == Rational(0)) ++lead;
  if (lead == c.size()) throw std::runtime_error("characteristic polynomial is identically zero");

  CharPoly p;
  p.k_z = k_z;
  p.l = l;
  p.coeffs.reserve(c.size() - lead);
  for (std::size_t i = lead; i < c.size(); ++i) p.coeffs.push_back((c[i] / c[lead]).to_double());
  return p;
}

std::vector<std::complex<double>> polynomial_roots(const CharPoly& poly) {
  std::vector<double> c = poly.coeffs;
  std::size_t lead = 0;
  while (lead < c.size() && c[lead] == 0.0) ++lead;
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead));
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) throw std::invalid_argument("polynomial_roots: degree must be at least 1");
  for (double& v : c) v /= c[0];

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(0, i) = -c[static_cast<std::size_t>(i) + 1];
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw std::runtime_error("polynomial_roots: eigensolver failed");

  std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);

  // A couple of Newton steps tighten the companion eigenvalues to the stated
  // residual bound for these low degrees.
  auto eval_both = [&](std::complex<double> x, std::complex<double>& p, std::complex<double>& dp) {
    p = 0.0;
    dp = 0.0;
    for (double coef : c) {
      dp = dp * x + p;
      p = p * x + coef;
    }
  };
  for (auto& r : roots) {
    for (int it = 0; it < 3; ++it) {
      std::complex<double> p, dp;
      eval_both(r, p, dp);
      if (std::abs(dp) < 1e-300) break;
      std::complex<double> step = p / dp;
      if (std::abs(step) > 0.5) break;
      r -= step;
    }
    if (std::abs(r.imag()) < 1e-12) r = {r.real(), 0.0};
  }

  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return roots;
}

StabilityVerdict classify(std::span<const std::complex<double>> roots, double tol) {
  if (!(tol > 0.0 && tol <= 1e-3)) throw std::invalid_argument("classify: tol must be in (0, 1e-3]");
  StabilityVerdict v;
  v.roots.assign(roots.begin(), roots.end());
  v.stable = true;
  for (const auto& r : roots) v.max_modulus = std::max(v.max_modulus, std::abs(r));
  if (v.max_modulus > 1.0 + tol) v.stable = false;
  if (v.stable) {
    for (std::size_t i = 0; i < v.roots.size() && v.stable; ++i) {
      if (std::abs(v.roots[i]) < 1.0 - tol) continue;
      for (std::size_t j = 0; j < v.roots.size(); ++j) {
        if (j != i && std::abs(v.roots[i] - v.roots[j]) <= tol) {
          v.stable = false;  // repeated root on the unit circle
          break;
        }
      }
    }
  }
  return v;
}

}  // namespace bsde
