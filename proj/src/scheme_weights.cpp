#include "bsde/scheme_weights.hpp"

#include <stdexcept>
#include <string>

namespace bsde {

namespace {

// gamma_j = (1/(span*h)) * integral over the first `span` pieces of the
// spline through the unit vector e_j. Linearity of the spline system makes
// these the coefficients of the general support values.
std::vector<Rational> unit_vector_weights(int k, int span, SplineKind kind, const Rational& h) {
  if (k < 1) throw std::invalid_argument("weights: step count must be positive");
  if (span < 1 || span > k) throw std::invalid_argument("weights: span must satisfy 1 <= l <= K");
  if (!kind_valid_for(kind, k))
    throw std::invalid_argument(std::string("weights: kind '") + to_string(kind) +
                                "' invalid for K=" + std::to_string(k));
  std::vector<Rational> gamma(static_cast<std::size_t>(k) + 1);
  std::vector<Rational> unit(static_cast<std::size_t>(k) + 1, Rational(0));
  for (int j = 0; j <= k; ++j) {
    unit[j] = Rational(1);
    auto pieces = build_spline<Rational>(unit, kind, h);
    Rational total(0);
    for (int p = 0; p < span; ++p) total += integrate_piece(pieces[p], h);
    gamma[j] = total / (Rational(span) * h);
    unit[j] = Rational(0);
  }
  return gamma;
}

}  // namespace

YWeights derive_y_weights(int k_y, SplineKind kind) {
  return derive_y_weights(k_y, kind, Rational(1));
}

YWeights derive_y_weights(int k_y, SplineKind kind, const Rational& h) {
  YWeights w;
  w.k_y = k_y;
  w.kind = kind;
  w.gamma = unit_vector_weights(k_y, k_y, kind, h);
  return w;
}

ZWeights derive_z_weights(int k_z, int l, SplineKind kind) {
  return derive_z_weights(k_z, l, kind, Rational(1));
}

ZWeights derive_z_weights(int k_z, int l, SplineKind kind, const Rational& h) {
  ZWeights w;
  w.k_z = k_z;
  w.l = l;
  w.kind = kind;
  w.gamma = unit_vector_weights(k_z, l, kind, h);
  return w;
}

}  // namespace bsde
