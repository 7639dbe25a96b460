#pragma once

#include <vector>

#include "bsde/rational.hpp"
#include "bsde/spline.hpp"

namespace bsde {

/// Multistep weights of the Y reference equation: Y_i picks up
/// h*K_y * sum_j gamma[j] * E_i[f(t_{i+j}, ...)] for j = 0..K_y.
struct YWeights {
  int k_y = 0;
  SplineKind kind = SplineKind::Line;
  std::vector<Rational> gamma;  // size k_y + 1

  std::vector<double> as_doubles() const {
    std::vector<double> g;
    g.reserve(gamma.size());
    for (const Rational& r : gamma) g.push_back(r.to_double());
    return g;
  }
};

/// Weights of the Z reference equation, integrated over [0, l*h]. The solver
/// always runs with l = 1; general l exists for the stability analysis.
struct ZWeights {
  int k_z = 0;
  int l = 1;
  SplineKind kind = SplineKind::Line;
  std::vector<Rational> gamma;  // size k_z + 1

  std::vector<double> as_doubles() const {
    std::vector<double> g;
    g.reserve(gamma.size());
    for (const Rational& r : gamma) g.push_back(r.to_double());
    return g;
  }
};

/// Weight j is the integral over the full span [0, K_y*h] of the spline
/// through the j-th canonical unit support vector, divided by K_y*h. The
/// result is an exact rational independent of h.
YWeights derive_y_weights(int k_y, SplineKind kind);
YWeights derive_y_weights(int k_y, SplineKind kind, const Rational& h);

/// Same construction with the integration stopped at [0, l*h].
ZWeights derive_z_weights(int k_z, int l, SplineKind kind);
ZWeights derive_z_weights(int k_z, int l, SplineKind kind, const Rational& h);

}  // namespace bsde
