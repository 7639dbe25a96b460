#include "bsde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsde {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Fourth-order mollifier (105/64)(1 - 3u^2)(1 - u^2)^2 on [-1, 1]:
// unit mass, vanishing moments through order 3.
double kernel_cdf(double w) {  // integral of the kernel from -1 to w
  double w2 = w * w;
  return 0.5 + (105.0 / 64.0) * w * (1.0 + w2 * (-5.0 / 3.0 + w2 * (7.0 / 5.0 - w2 * 3.0 / 7.0)));
}

double kernel_first_moment(double w) {  // integral of u * kernel from -1 to w
  double w2 = w * w;
  return (105.0 / 64.0) * w2 * (0.5 + w2 * (-5.0 / 4.0 + w2 * (7.0 / 6.0 - w2 * 3.0 / 8.0))) -
         35.0 / 512.0;
}

}  // namespace

double gbm_step(double s, double h, double increment, double mu, double sigma) {
  if (!(s > 0.0)) throw std::invalid_argument("gbm_step: s must be positive");
  return s * std::exp((mu - 0.5 * sigma * sigma) * h + sigma * increment);
}

void forward_states(const ForwardDynamics& fwd, double t, std::size_t n, const double* x, int d,
                    double* out) {
  if (fwd.kind == ForwardDynamics::Kind::Brownian) {
    std::copy(x, x + n * static_cast<std::size_t>(d), out);
    return;
  }
  const double base = fwd.s0 * std::exp((fwd.mu - 0.5 * fwd.sigma * fwd.sigma) * t);
  for (std::size_t i = 0; i < n; ++i) out[i] = base * std::exp(fwd.sigma * x[i]);
}

double SmoothedPayoff::operator()(double s) const {
  const double w = (s - strike) / radius;
  if (w >= 1.0) return s - strike;
  if (w <= -1.0) return 0.0;
  return radius * (w * kernel_cdf(w) - kernel_first_moment(w));
}

double SmoothedPayoff::derivative(double s) const {
  const double w = (s - strike) / radius;
  if (w >= 1.0) return 1.0;
  if (w <= -1.0) return 0.0;
  return kernel_cdf(w);
}

SmoothedPayoff smooth_payoff(double strike, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("smooth_payoff: radius must be positive");
  return SmoothedPayoff{strike, radius};
}

double black_scholes_price(double s, double strike, double r, double div, double sigma,
                           double tau) {
  if (tau <= 0.0) return std::max(s - strike, 0.0);
  const double vol = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / strike) + (r - div + 0.5 * sigma * sigma) * tau) / vol;
  const double d2 = d1 - vol;
  return s * std::exp(-div * tau) * norm_cdf(d1) - strike * std::exp(-r * tau) * norm_cdf(d2);
}

double black_scholes_delta(double s, double strike, double r, double div, double sigma,
                           double tau) {
  if (tau <= 0.0) return s > strike ? 1.0 : 0.0;
  const double vol = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / strike) + (r - div + 0.5 * sigma * sigma) * tau) / vol;
  return std::exp(-div * tau) * norm_cdf(d1);
}

BSDEProblem example1() {
  BSDEProblem p;
  p.name = "example1";
  p.m = 1;
  p.d = 1;
  p.T = 1.0;
  p.generator_uses_z = false;
  p.generator = [](double, std::size_t n, const double*, const double* y, const double*,
                   double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = -0.625 * y[i];
  };
  p.terminal = [T = p.T](std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(0.5 * x[i] + 0.5 * T);
  };
  p.analytic = [](double t, std::size_t n, const double* x, double* y, double* z) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::exp(0.5 * x[i] + 0.5 * t);
      z[i] = 0.5 * y[i];
    }
  };
  return p;
}

BSDEProblem example2() {
  BSDEProblem p;
  p.name = "example2";
  p.m = 1;
  p.d = 1;
  p.T = 1.0;
  p.generator = [](double t, std::size_t n, const double*, const double* y, const double* z,
                   double* out) {
    const double et2 = std::exp(t * t);
    const double emt2 = 1.0 / et2;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = 0.5 * (et2 - 4.0 * t * y[i] - 3.0 * std::exp(t * t - y[i] * emt2) +
                      z[i] * z[i] * emt2);
  };
  p.terminal = [T = p.T](std::size_t n, const double* x, double* out) {
    const double eT2 = std::exp(T * T);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(std::sin(x[i]) + 3.0) * eT2;
  };
  p.analytic = [](double t, std::size_t n, const double* x, double* y, double* z) {
    const double et2 = std::exp(t * t);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sin(x[i]);
      y[i] = std::log(s + 3.0) * et2;
      z[i] = et2 * std::cos(x[i]) / (s + 3.0);
    }
  };
  return p;
}

BSDEProblem example_2d() {
  BSDEProblem p;
  p.name = "example_2d";
  p.m = 1;
  p.d = 2;
  p.T = 1.0;
  p.generator = [](double, std::size_t n, const double*, const double* y, const double* z,
                   double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] - 0.5 * z[2 * i] - 0.5 * z[2 * i + 1];
  };
  p.terminal = [T = p.T](std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(x[2 * i] + x[2 * i + 1] + T);
  };
  p.analytic = [](double t, std::size_t n, const double* x, double* y, double* z) {
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = x[2 * i] + x[2 * i + 1] + t;
      y[i] = std::sin(arg);
      z[2 * i] = std::cos(arg);
      z[2 * i + 1] = z[2 * i];
    }
  };
  return p;
}

BSDEProblem black_scholes(double strike, double r, double mu, double div, double sigma, double s0,
                          double T) {
  if (!(sigma > 0.0) || !(s0 > 0.0) || !(strike > 0.0) || !(T > 0.0))
    throw std::invalid_argument("black_scholes: strike, sigma, s0 and T must be positive");
  BSDEProblem p;
  p.name = "black_scholes";
  p.m = 1;
  p.d = 1;
  p.T = T;
  p.forward = {ForwardDynamics::Kind::GBM, mu, sigma, s0};
  const double hedge = (mu - r + div) / sigma;
  p.generator = [r, hedge](double, std::size_t n, const double*, const double* y, const double* z,
                           double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = -r * y[i] - hedge * z[i];
  };
  p.terminal = [strike](std::size_t n, const double* s, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(s[i] - strike, 0.0);
  };
  p.analytic = [strike, r, div, sigma, T](double t, std::size_t n, const double* s, double* y,
                                          double* z) {
    const double tau = T - t;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = black_scholes_price(s[i], strike, r, div, sigma, tau);
      z[i] = sigma * s[i] * black_scholes_delta(s[i], strike, r, div, sigma, tau);
    }
  };
  p.smoothed_terminal = BSDEProblem::SmoothedTerminal{
      // twice the S-grid spacing near the strike (dS ~ sigma * S * dx)
      [strike, sigma](double dx) { return 2.0 * sigma * strike * dx; },
      [strike, sigma](double radius, std::size_t n, const double* s, double* y, double* z) {
        SmoothedPayoff payoff{strike, radius};
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = payoff(s[i]);
          z[i] = sigma * s[i] * payoff.derivative(s[i]);
        }
      }};
  return p;
}

}  // namespace bsde
