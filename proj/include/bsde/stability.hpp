#pragma once

#include <complex>
#include <span>
#include <vector>

#include "bsde/spline.hpp"

namespace bsde {

/// Characteristic polynomial of the backward Z difference equation,
///   lambda^{K_z - l} - sum_{j=0}^{K_z} gamma_j^l lambda^{K_z - j},
/// normalized to a monic polynomial. coeffs holds the monic coefficients in
/// descending powers, coeffs[0] = 1.
struct CharPoly {
  int k_z = 0;
  int l = 1;
  std::vector<double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  std::complex<double> eval(std::complex<double> lambda) const;
};

CharPoly characteristic_polynomial(int k_z, int l, SplineKind kind);

/// All complex roots via companion-matrix eigenvalues with a Newton polish,
/// sorted by descending real part. Residuals |p(root)| stay below
/// 1e-10 * max |coefficient|.
std::vector<std::complex<double>> polynomial_roots(const CharPoly& poly);

struct StabilityVerdict {
  std::vector<std::complex<double>> roots;
  bool stable = false;
  double max_modulus = 0.0;
};

/// Zero-stability: every root inside the closed unit disc (up to tol) and
/// every root within tol of the circle simple (pairwise distance > tol).
StabilityVerdict classify(std::span<const std::complex<double>> roots, double tol = 1e-9);

}  // namespace bsde
