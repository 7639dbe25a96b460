#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsde/interpolant.hpp"
#include "bsde/problems.hpp"
#include "bsde/quadrature.hpp"
#include "bsde/scheme_weights.hpp"
#include "bsde/space_grid.hpp"

namespace bsde {

/// How the K-1 startup levels below the terminal one are produced.
///  - IterativeRampUp: level N_T - j via a j-step scheme, j = 1..K-1.
///  - FineOneStep: one-step scheme with h/substeps from T down to
///    t_{N_T-K+1}, restricted to the coarse levels.
///  - Analytic: take the problem's analytic solution (startup values are
///    assumed given; required when reproducing the reference error tables).
enum class BootstrapMode { IterativeRampUp, FineOneStep, Analytic };

struct SolverConfig {
  int k_y = 1;
  int k_z = 1;
  int n_t = 8;
  int quad_order = 8;
  double lower = -8.0;
  double upper = 8.0;
  /// Space-time coupling exponent; 0 selects min(k_y+1, k_z) capped at 3
  /// (4 when the generator ignores z).
  int q = 0;
  double dx_override = 0.0;  // >0 replaces dx_from_h(h, q)
  SplineKind k2_variant = SplineKind::QuadraticPolynomial;
  double newton_tol = 1e-12;
  int newton_max_iter = 30;
  BootstrapMode bootstrap = BootstrapMode::IterativeRampUp;
  int fine_substeps = 64;
  /// Kreiss smoothing radius for problems with a smoothed terminal:
  /// 0 = problem default (from dx), >0 = explicit radius, <0 = disabled.
  double smoothing_radius = 0.0;
  /// Replace the first sweep level N_T - K by a (K-1)-step scheme so the
  /// smoothed terminal data never enters the multistep stencil.
  bool drop_smoothed_terminal = true;
  Extrapolation extrapolation = Extrapolation::PolynomialExtension;
  int workers = 0;           // 0 = BSDE_WORKERS env or hardware concurrency
  std::string dump_dir;      // when set, every computed level is written there
};

int effective_q(const SolverConfig& config, const BSDEProblem& problem);

struct SolveDiagnostics {
  long long newton_iterations = 0;
  int newton_max_iterations = 0;
  double wall_seconds = 0.0;
  int workers = 1;
  std::size_t grid_nodes = 0;
  double dx = 0.0;
  int q = 0;
};

struct SolveResult {
  std::vector<double> y0;   // m values at the t=0 evaluation point (x = 0)
  std::vector<double> z0;   // m*d values
  SolutionLevel level0;
  SpaceGrid grid;
  SolveDiagnostics diagnostics;
};

/// Backward sweep: terminal data, bootstrap of the K-1 startup levels, then
/// z/y updates per level down to t = 0, evaluated at the origin (s0 for GBM).
SolveResult solve(const BSDEProblem& problem, const SolverConfig& config);

// ---- single-level machinery (used by solve, exercised directly in tests) ----

struct StepParams {
  int k_y = 1;
  int k_z = 1;
  double h = 0.0;    // stencil level spacing
  double t_i = 0.0;  // time of the level being computed
  double newton_tol = 1e-12;
  int newton_max_iter = 30;
  int workers = 0;
};

/// Gauss-Hermite approximations of every conditional expectation the Y and Z
/// updates need at one level, per grid node. Plane j-1 of e_f holds
/// E[f(t_{i+j}, Y, Z)] and so on; e_y holds E[Y^{i+k_y}].
struct LevelExpectations {
  int k_y = 0, k_z = 0, m = 1, d = 1;
  std::size_t n_nodes = 0;
  std::vector<double> e_y;    // n*m
  std::vector<double> e_f;    // k_y planes of n*m
  std::vector<double> e_fdw;  // k_z planes of n*m*d
  std::vector<double> e_z;    // k_z planes of n*m*d

  double* f_plane(int j) { return e_f.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m); }
  const double* f_plane(int j) const { return e_f.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m); }
  double* fdw_plane(int j) { return e_fdw.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m) * static_cast<std::size_t>(d); }
  const double* fdw_plane(int j) const { return e_fdw.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m) * static_cast<std::size_t>(d); }
  double* z_plane(int j) { return e_z.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m) * static_cast<std::size_t>(d); }
  const double* z_plane(int j) const { return e_z.data() + static_cast<std::size_t>(j - 1) * n_nodes * static_cast<std::size_t>(m) * static_cast<std::size_t>(d); }
};

/// One fused pass over the quadrature points of all ahead levels
/// (ahead[j-1] interpolates level i+j).
LevelExpectations compute_expectations(const BSDEProblem& problem, const SpaceGrid& grid,
                                       const TensorRule& rule, const StepParams& params,
                                       std::span<const FieldInterpolant* const> ahead);

/// Explicit Z update: (E[Z^{i+1}] + sum_j gamma_j E[f dW^T] - sum_j gamma_j
/// E[Z^{i+j}]) / gamma_0. Returns the z field (n * m * d).
std::vector<double> step_z(const LevelExpectations& expectations, std::span<const double> gamma_z);

/// Implicit Y update solved per node by Newton with a finite-difference
/// Jacobian, started from the explicit predictor. Returns the y field (n*m).
std::vector<double> step_y(const BSDEProblem& problem, const SpaceGrid& grid,
                           const StepParams& params, const LevelExpectations& expectations,
                           std::span<const double> gamma_y, std::span<const double> z_field,
                           SolveDiagnostics* diagnostics);

}  // namespace bsde
