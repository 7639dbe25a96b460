#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "bsde/convergence.hpp"
#include "bsde/scheme_weights.hpp"
#include "bsde/solver.hpp"
#include "bsde/stability.hpp"

namespace {

bsde::SplineKind parse_k2(const std::string& v) {
  if (v == "quadratic") return bsde::SplineKind::QuadraticPolynomial;
  if (v == "natural") return bsde::SplineKind::NaturalCubic;
  throw CLI::ValidationError("--k2 must be 'quadratic' or 'natural'");
}

bsde::BootstrapMode parse_bootstrap(const std::string& v) {
  if (v == "rampup") return bsde::BootstrapMode::IterativeRampUp;
  if (v == "fine") return bsde::BootstrapMode::FineOneStep;
  if (v == "analytic") return bsde::BootstrapMode::Analytic;
  throw CLI::ValidationError("--bootstrap must be 'rampup', 'fine' or 'analytic'");
}

int run(int argc, char** argv) {
  CLI::App app{"Cubic-spline multistep solver for backward stochastic differential equations"};
  app.require_subcommand(1);

  // ---- weights ----
  auto* weights = app.add_subcommand("weights", "Print the exact multistep weight rationals");
  int w_ky = 0, w_kz = 0, w_l = 1;
  std::string w_k2 = "quadratic";
  weights->add_option("--ky", w_ky, "Y-equation step count");
  weights->add_option("--kz", w_kz, "Z-equation step count");
  weights->add_option("--l", w_l, "Z integration span (with --kz)");
  weights->add_option("--k2", w_k2, "K=2 variant: quadratic|natural");
  weights->callback([&] {
    if ((w_ky > 0) == (w_kz > 0))
      throw CLI::ValidationError("pass exactly one of --ky or --kz");
    const bsde::SplineKind variant = parse_k2(w_k2);
    if (w_ky > 0) {
      bsde::YWeights w = bsde::derive_y_weights(w_ky, bsde::default_kind(w_ky, variant));
      std::printf("gamma[K_y=%d, kind=%s]:", w.k_y, bsde::to_string(w.kind));
      for (const auto& g : w.gamma) std::printf(" %s", g.str().c_str());
      std::printf("\n");
    } else {
      bsde::ZWeights w = bsde::derive_z_weights(w_kz, w_l, bsde::default_kind(w_kz, variant));
      std::printf("gamma[K_z=%d, l=%d, kind=%s]:", w.k_z, w.l, bsde::to_string(w.kind));
      for (const auto& g : w.gamma) std::printf(" %s", g.str().c_str());
      std::printf("\n");
    }
  });

  // ---- stability ----
  auto* stability = app.add_subcommand("stability", "Roots and zero-stability of the Z recursion");
  int s_kz = 1, s_l = 1;
  std::string s_k2 = "quadratic";
  stability->add_option("--kz", s_kz, "step count K_z")->required();
  stability->add_option("--l", s_l, "integration span l");
  stability->add_option("--k2", s_k2, "K=2 variant: quadratic|natural");
  stability->callback([&] {
    bsde::CharPoly p =
        bsde::characteristic_polynomial(s_kz, s_l, bsde::default_kind(s_kz, parse_k2(s_k2)));
    auto roots = bsde::polynomial_roots(p);
    bsde::StabilityVerdict v = bsde::classify(roots);
    std::printf("characteristic polynomial (monic, descending powers):");
    for (double c : p.coeffs) std::printf(" %.12g", c);
    std::printf("\nroots:\n");
    for (const auto& r : roots) {
      if (r.imag() == 0.0)
        std::printf("  %.6f\n", r.real());
      else
        std::printf("  %.6f %+.6fi\n", r.real(), r.imag());
    }
    std::printf("max modulus: %.6f\nverdict: %s\n", v.max_modulus, v.stable ? "stable" : "unstable");
  });

  // ---- solve ----
  auto* solve_cmd = app.add_subcommand("solve", "Run the multistep solver once");
  std::string problem_name = "example1", q_str = "auto", bootstrap_str = "rampup",
              k2_str = "quadratic", dump_dir;
  bsde::SolverConfig config;
  double strike = 100.0, rate = 0.1, mu = 0.2, div = 0.0, sigma = 0.25, s0 = 100.0, horizon = 0.1;
  solve_cmd->add_option("--problem", problem_name,
                        "example1|example2|example_2d|black_scholes");
  solve_cmd->add_option("--ky", config.k_y, "Y step count")->required();
  solve_cmd->add_option("--kz", config.k_z, "Z step count")->required();
  solve_cmd->add_option("--nt", config.n_t, "time steps")->required();
  solve_cmd->add_option("--L", config.quad_order, "Gauss-Hermite order");
  solve_cmd->add_option("--q", q_str, "grid coupling exponent or 'auto'");
  solve_cmd->add_option("--k2", k2_str, "K=2 variant: quadratic|natural");
  solve_cmd->add_option("--bootstrap", bootstrap_str, "rampup|fine|analytic");
  solve_cmd->add_option("--substeps", config.fine_substeps, "substeps for --bootstrap fine");
  solve_cmd->add_option("--smoothing", config.smoothing_radius,
                        "payoff smoothing radius (0 auto, <0 off)");
  solve_cmd->add_option("--workers", config.workers, "worker threads (0 = BSDE_WORKERS/auto)");
  solve_cmd->add_option("--dump-dir", dump_dir, "write every time level to this directory");
  solve_cmd->add_option("--strike", strike, "Black-Scholes strike");
  solve_cmd->add_option("--r", rate, "risk-free rate");
  solve_cmd->add_option("--mu", mu, "asset drift");
  solve_cmd->add_option("--div", div, "dividend rate");
  solve_cmd->add_option("--sigma", sigma, "volatility");
  solve_cmd->add_option("--s0", s0, "spot");
  solve_cmd->add_option("--T", horizon, "Black-Scholes horizon");
  solve_cmd->callback([&] {
    bsde::ExperimentSpec pspec;
    pspec.problem = problem_name;
    pspec.strike = strike;
    pspec.r = rate;
    pspec.mu = mu;
    pspec.div = div;
    pspec.sigma = sigma;
    pspec.s0 = s0;
    if (problem_name == "black_scholes") pspec.horizon = horizon;
    bsde::BSDEProblem problem = bsde::make_problem(pspec);
    config.q = q_str == "auto" ? 0 : std::stoi(q_str);
    config.k2_variant = parse_k2(k2_str);
    config.bootstrap = parse_bootstrap(bootstrap_str);
    config.dump_dir = dump_dir;
    bsde::SolveResult r = bsde::solve(problem, config);

    std::printf("problem: %s  (m=%d, d=%d, T=%g)\n", problem.name.c_str(), problem.m, problem.d,
                problem.T);
    std::printf("k_y=%d k_z=%d n_t=%d q=%d dx=%.6g nodes=%zu L=%d\n", config.k_y, config.k_z,
                config.n_t, r.diagnostics.q, r.diagnostics.dx, r.diagnostics.grid_nodes,
                config.quad_order);
    std::printf("y0:");
    for (double v : r.y0) std::printf(" %.12g", v);
    std::printf("\nz0:");
    for (double v : r.z0) std::printf(" %.12g", v);
    std::printf("\n");
    if (problem.has_analytic()) {
      std::vector<double> origin(static_cast<std::size_t>(problem.d), 0.0);
      std::vector<double> state(static_cast<std::size_t>(problem.state_dim()));
      bsde::forward_states(problem.forward, 0.0, 1, origin.data(), problem.d, state.data());
      std::vector<double> ya(static_cast<std::size_t>(problem.m));
      std::vector<double> za(static_cast<std::size_t>(problem.m) * static_cast<std::size_t>(problem.d));
      problem.analytic(0.0, 1, state.data(), ya.data(), za.data());
      double ey = 0.0, ez = 0.0;
      for (std::size_t i = 0; i < ya.size(); ++i) ey += std::abs(r.y0[i] - ya[i]) / static_cast<double>(ya.size());
      for (std::size_t i = 0; i < za.size(); ++i) ez += std::abs(r.z0[i] - za[i]) / static_cast<double>(za.size());
      std::printf("err_y: %.6e\nerr_z: %.6e\n", ey, ez);
    }
    std::printf("newton iterations: %lld (max %d per node)\nwall: %.3fs  workers: %d\n",
                r.diagnostics.newton_iterations, r.diagnostics.newton_max_iterations,
                r.diagnostics.wall_seconds, r.diagnostics.workers);
  });

  // ---- convergence ----
  auto* conv = app.add_subcommand("convergence", "Run a convergence study from a JSON config");
  std::string config_path, out_dir = "out";
  conv->add_option("--config", config_path, "JSON experiment spec")->required();
  conv->add_option("--out", out_dir, "output directory");
  conv->callback([&] {
    bsde::ExperimentSpec spec = bsde::load_experiment_spec(config_path);
    bsde::ConvergenceReport report = bsde::run_experiment(spec);
    bsde::emit_report(report, out_dir);
    for (std::size_t ti = 0; ti < report.rates.size(); ++ti) {
      const auto& tr = report.rates[ti];
      std::printf("(k_y=%d, k_z=%d, q=%d):", tr.triple.k_y, tr.triple.k_z, tr.triple.q);
      for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
        const auto& c = report.cells[ti * spec.ladder.size() + li];
        std::printf(" %s", c.ok ? "" : "[failed]");
        if (c.ok) std::printf("%.2e/%.2e", c.err_y, c.err_z);
      }
      std::printf("  CR_y=%s CR_z=%s\n", tr.rate_y ? std::to_string(*tr.rate_y).c_str() : "--",
                  tr.rate_z ? std::to_string(*tr.rate_z).c_str() : "--");
    }
    std::printf("report written to %s/%s_report.{csv,md}\n", out_dir.c_str(), spec.tag.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '"' || c == '\n') c = ' ';
    std::fprintf(stderr, "{\"error\":\"%s\"}\n", msg.c_str());
    return e.get_exit_code();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '"' || c == '\n') c = ' ';
    std::fprintf(stderr, "{\"error\":\"%s\"}\n", msg.c_str());
    return 1;
  }
}
