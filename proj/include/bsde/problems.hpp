#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace bsde {

/// Forward state: plain Brownian motion (X_t = W_t) or geometric Brownian
/// motion stepped exactly in the Brownian coordinate.
struct ForwardDynamics {
  enum class Kind { Brownian, GBM };
  Kind kind = Kind::Brownian;
  double mu = 0.0;
  double sigma = 0.0;
  double s0 = 0.0;
};

/// Exact lognormal step S exp((mu - sigma^2/2) h + sigma * increment).
double gbm_step(double s, double h, double increment, double mu, double sigma);

/// Map grid coordinates to problem states: identity for Brownian, the GBM
/// closed form (d = 1) otherwise. out has n * state_dim entries.
void forward_states(const ForwardDynamics& fwd, double t, std::size_t n, const double* x, int d,
                    double* out);

/// European call payoff mollified with a fourth-order kernel of radius
/// `radius`: coincides with the raw payoff outside the window, C^1
/// everywhere, and preserves the payoff's integral over the window.
struct SmoothedPayoff {
  double strike = 0.0;
  double radius = 0.0;

  double operator()(double s) const;
  double derivative(double s) const;
};

SmoothedPayoff smooth_payoff(double strike, double radius);

/// Closed-form European call with continuous dividend yield; tau <= 0 falls
/// back to the payoff (and the delta to its a.e. derivative).
double black_scholes_price(double s, double strike, double r, double div, double sigma, double tau);
double black_scholes_delta(double s, double strike, double r, double div, double sigma, double tau);

/// A backward problem -dY = f(t, X, Y, Z) dt - Z dW with terminal Y_T = g(X_T).
/// All callbacks are batched over n points: states are n * state_dim
/// (state_dim = 1 for GBM, = d for Brownian), y is n * m, z is n * (m*d).
/// Callbacks must be pure; the solver invokes them concurrently.
struct BSDEProblem {
  std::string name;
  int m = 1;
  int d = 1;
  double T = 1.0;
  ForwardDynamics forward;
  bool generator_uses_z = true;

  std::function<void(double t, std::size_t n, const double* x, const double* y, const double* z,
                     double* out)>
      generator;
  std::function<void(std::size_t n, const double* x, double* out)> terminal;
  /// Optional analytic solution (y_out n*m, z_out n*(m*d)); z reported in the
  /// grid coordinate for GBM problems, i.e. sigma * S * dV/dS.
  std::function<void(double t, std::size_t n, const double* x, double* y_out, double* z_out)>
      analytic;

  /// Optional mollified terminal data; the radius is fixed at solve time from
  /// the spatial resolution.
  struct SmoothedTerminal {
    std::function<double(double dx)> radius_for_dx;
    std::function<void(double radius, std::size_t n, const double* x, double* y_out,
                       double* z_out)>
        eval;
  };
  std::optional<SmoothedTerminal> smoothed_terminal;

  int state_dim() const { return forward.kind == ForwardDynamics::Kind::GBM ? 1 : d; }
  bool has_analytic() const { return static_cast<bool>(analytic); }
};

/// -dY = -(5/8) Y dt - Z dW, Y_T = exp(W_T/2 + T/2); exact (Y_0, Z_0) = (1, 1/2).
BSDEProblem example1();

/// Nonlinear generator with exact solution Y_t = ln(sin W_t + 3) exp(t^2);
/// exact (Y_0, Z_0) = (ln 3, 1/3).
BSDEProblem example2();

/// Two-dimensional Brownian problem with Y_t = sin(W^1_t + W^2_t + t);
/// exact (Y_0, Z_0) = (0, (1, 1)).
BSDEProblem example_2d();

/// European call FBSDE under GBM with dividend rate `div`; the terminal
/// payoff is Kreiss-smoothed with radius 2 * (S-grid spacing at the strike)
/// unless overridden at solve time.
BSDEProblem black_scholes(double strike, double r, double mu, double div, double sigma, double s0,
                          double T);

}  // namespace bsde
