#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsde/problems.hpp"
#include "bsde/solver.hpp"

namespace bsde {

struct TripleSpec {
  int k_y = 1;
  int k_z = 1;
  int q = 0;  // 0 = auto
};

/// One convergence study: a problem, (k_y, k_z, q) triples, and a refinement
/// ladder of time step counts.
struct ExperimentSpec {
  std::string problem = "example1";
  // Black-Scholes parameters (used when problem == "black_scholes").
  double strike = 100.0, r = 0.1, mu = 0.2, div = 0.0, sigma = 0.25, s0 = 100.0;
  std::optional<double> horizon;  // overrides the problem default T
  std::vector<TripleSpec> triples;
  std::vector<int> ladder = {8, 16, 32, 64, 128};
  int quad_order = 8;
  SplineKind k2_variant = SplineKind::QuadraticPolynomial;
  BootstrapMode bootstrap = BootstrapMode::Analytic;
  int fine_substeps = 64;
  double smoothing_radius = 0.0;
  int workers = 0;
  std::string tag = "experiment";
};

BSDEProblem make_problem(const ExperimentSpec& spec);

/// Parse the JSON configuration document (field names mirror ExperimentSpec;
/// everything except "triples" is optional).
ExperimentSpec load_experiment_spec(const std::string& path);

struct CellResult {
  TripleSpec triple;
  int n_t = 0;
  bool ok = false;
  std::string error;
  double err_y = 0.0;
  double err_z = 0.0;  // averaged over components in d > 1
  double y0 = 0.0;
  std::vector<double> z0;
  double wall_seconds = 0.0;
};

struct TripleRates {
  TripleSpec triple;
  std::optional<double> rate_y;
  std::optional<double> rate_z;
  std::vector<int> excluded_n_t;  // cells under the error floor, left out of the fit
};

struct ConvergenceReport {
  ExperimentSpec spec;
  std::vector<CellResult> cells;      // sorted by (triple order, n_t)
  std::vector<TripleRates> rates;
};

/// Solve every (triple, n_t) cell and fit the convergence rates. Cell
/// failures are recorded without aborting the remaining cells.
ConvergenceReport run_experiment(const ExperimentSpec& spec);

/// Negated least-squares slope of log2(error) against log2(n_t).
/// Throws on non-positive errors ("below measurement floor").
double fit_rate(std::span<const double> errors, std::span<const int> n_ts);

/// Emit report.csv (full-precision, parseable back), report.md (one table row
/// per triple, one column per n_t, CR column), and plot_y/plot_z data files
/// with one (log2 n_t, log2 error) series per triple.
void emit_report(const ConvergenceReport& report, const std::string& dir);

/// Reconstruct cells from an emitted CSV (numerically exact round trip).
std::vector<CellResult> parse_report_csv(const std::string& path);

}  // namespace bsde
