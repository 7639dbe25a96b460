#include "bsde/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bsde {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

}  // namespace

BSDEProblem make_problem(const ExperimentSpec& spec) {
  BSDEProblem p;
  if (spec.problem == "example1")
    p = example1();
  else if (spec.problem == "example2")
    p = example2();
  else if (spec.problem == "example_2d")
    p = example_2d();
  else if (spec.problem == "black_scholes")
    p = black_scholes(spec.strike, spec.r, spec.mu, spec.div, spec.sigma, spec.s0,
                      spec.horizon.value_or(0.1));
  else
    throw std::invalid_argument("unknown problem '" + spec.problem + "'");
  if (spec.horizon && spec.problem != "black_scholes") {
    // Built-in analytic solutions fix T; only the horizon-parameterized
    // Black-Scholes problem accepts an override.
    throw std::invalid_argument("horizon override is only supported for black_scholes");
  }
  return p;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json j = nlohmann::json::parse(in);

  ExperimentSpec spec;
  spec.problem = j.value("problem", spec.problem);
  spec.strike = j.value("strike", spec.strike);
  spec.r = j.value("r", spec.r);
  spec.mu = j.value("mu", spec.mu);
  spec.div = j.value("div", spec.div);
  spec.sigma = j.value("sigma", spec.sigma);
  spec.s0 = j.value("s0", spec.s0);
  if (j.contains("horizon")) spec.horizon = j["horizon"].get<double>();
  if (j.contains("ladder")) spec.ladder = j["ladder"].get<std::vector<int>>();
  spec.quad_order = j.value("quad_order", spec.quad_order);
  spec.fine_substeps = j.value("fine_substeps", spec.fine_substeps);
  spec.smoothing_radius = j.value("smoothing_radius", spec.smoothing_radius);
  spec.workers = j.value("workers", spec.workers);
  spec.tag = j.value("tag", spec.problem);
  if (j.contains("k2_variant")) {
    std::string v = j["k2_variant"].get<std::string>();
    if (v == "quadratic")
      spec.k2_variant = SplineKind::QuadraticPolynomial;
    else if (v == "natural")
      spec.k2_variant = SplineKind::NaturalCubic;
    else
      throw std::invalid_argument("k2_variant must be 'quadratic' or 'natural'");
  }
  if (j.contains("bootstrap")) {
    std::string v = j["bootstrap"].get<std::string>();
    if (v == "rampup")
      spec.bootstrap = BootstrapMode::IterativeRampUp;
    else if (v == "fine")
      spec.bootstrap = BootstrapMode::FineOneStep;
    else if (v == "analytic")
      spec.bootstrap = BootstrapMode::Analytic;
    else
      throw std::invalid_argument("bootstrap must be 'rampup', 'fine' or 'analytic'");
  }
  if (!j.contains("triples")) throw std::invalid_argument("config needs a 'triples' array");
  for (const auto& t : j["triples"]) {
    TripleSpec ts;
    if (t.is_array()) {
      if (t.size() < 2) throw std::invalid_argument("triple arrays need [k_y, k_z, q]");
      ts.k_y = t[0].get<int>();
      ts.k_z = t[1].get<int>();
      ts.q = t.size() > 2 ? t[2].get<int>() : 0;
    } else {
      ts.k_y = t.value("k_y", 1);
      ts.k_z = t.value("k_z", 1);
      ts.q = t.value("q", 0);
    }
    spec.triples.push_back(ts);
  }
  return spec;
}

double fit_rate(std::span<const double> errors, std::span<const int> n_ts) {
  if (errors.size() != n_ts.size() || errors.size() < 2)
    throw std::invalid_argument("fit_rate: need matching sequences of length >= 2");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("fit_rate: error below measurement floor");
  const std::size_t n = errors.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log2(static_cast<double>(n_ts[i]));
    ys[i] = std::log2(errors[i]);
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: degenerate n_t sequence");
  return -sxy / sxx;
}

ConvergenceReport run_experiment(const ExperimentSpec& spec) {
  if (spec.triples.empty()) throw std::invalid_argument("run_experiment: no triples");
  if (spec.ladder.empty()) throw std::invalid_argument("run_experiment: empty ladder");
  for (std::size_t i = 1; i < spec.ladder.size(); ++i)
    if (spec.ladder[i] <= spec.ladder[i - 1])
      throw std::invalid_argument("run_experiment: ladder must be strictly increasing");

  BSDEProblem problem = make_problem(spec);
  if (!problem.has_analytic())
    throw std::invalid_argument("run_experiment: problem needs an analytic solution");
  for (const TripleSpec& t : spec.triples)
    for (int nt : spec.ladder)
      if (nt < std::max(t.k_y, t.k_z) + 1)
        throw std::invalid_argument("run_experiment: every n_t must be >= max(k_y,k_z)+1");

  // Exact (Y_0, Z_0) at the evaluation point.
  const int m = problem.m, d = problem.d;
  std::vector<double> y_ref(static_cast<std::size_t>(m));
  std::vector<double> z_ref(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
  {
    std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
    std::vector<double> state(static_cast<std::size_t>(problem.state_dim()));
    forward_states(problem.forward, 0.0, 1, origin.data(), d, state.data());
    problem.analytic(0.0, 1, state.data(), y_ref.data(), z_ref.data());
  }

  ConvergenceReport report;
  report.spec = spec;
  for (const TripleSpec& triple : spec.triples) {
    for (int nt : spec.ladder) {
      CellResult cell;
      cell.triple = triple;
      cell.n_t = nt;
      SolverConfig config;
      config.k_y = triple.k_y;
      config.k_z = triple.k_z;
      config.q = triple.q;
      config.n_t = nt;
      config.quad_order = spec.quad_order;
      config.k2_variant = spec.k2_variant;
      config.bootstrap = spec.bootstrap;
      config.fine_substeps = spec.fine_substeps;
      config.smoothing_radius = spec.smoothing_radius;
      config.workers = spec.workers;
      cell.triple.q = effective_q(config, problem);
      try {
        SolveResult r = solve(problem, config);
        cell.ok = true;
        cell.y0 = r.y0[0];
        cell.z0 = r.z0;
        cell.wall_seconds = r.diagnostics.wall_seconds;
        cell.err_y = 0.0;
        for (int c = 0; c < m; ++c) cell.err_y += std::abs(r.y0[static_cast<std::size_t>(c)] - y_ref[static_cast<std::size_t>(c)]);
        cell.err_y /= m;
        cell.err_z = 0.0;
        for (std::size_t c = 0; c < z_ref.size(); ++c) cell.err_z += std::abs(r.z0[c] - z_ref[c]);
        cell.err_z /= static_cast<double>(z_ref.size());
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }

  // Per-triple least-squares rates over the cells above the error floor.
  constexpr double kFloor = 1e-14;
  for (std::size_t ti = 0; ti < spec.triples.size(); ++ti) {
    TripleRates tr;
    tr.triple = report.cells[ti * spec.ladder.size()].triple;
    std::vector<double> ey, ez;
    std::vector<int> ny, nz;
    for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
      const CellResult& cell = report.cells[ti * spec.ladder.size() + li];
      if (!cell.ok) continue;
      bool excluded = false;
      if (cell.err_y >= kFloor) {
        ey.push_back(cell.err_y);
        ny.push_back(cell.n_t);
      } else {
        excluded = true;
      }
      if (cell.err_z >= kFloor) {
        ez.push_back(cell.err_z);
        nz.push_back(cell.n_t);
      } else {
        excluded = true;
      }
      if (excluded) tr.excluded_n_t.push_back(cell.n_t);
    }
    if (ey.size() >= 2) tr.rate_y = fit_rate(ey, ny);
    if (ez.size() >= 2) tr.rate_z = fit_rate(ez, nz);
    report.rates.push_back(std::move(tr));
  }
  return report;
}

void emit_report(const ConvergenceReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string base = dir + "/" + report.spec.tag;

  {
    std::ofstream csv(base + "_report.csv");
    if (!csv) throw std::runtime_error("emit_report: cannot write " + base + "_report.csv");
    csv << "problem,k_y,k_z,q,n_t,status,err_y,err_z,y0,z0,wall_seconds\n";
    for (const CellResult& c : report.cells) {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      csv << report.spec.problem << ',' << c.triple.k_y << ',' << c.triple.k_z << ','
          << c.triple.q << ',' << c.n_t << ',' << (c.ok ? "ok" : "failed: " + err) << ','
          << fmt(c.err_y) << ',' << fmt(c.err_z) << ',' << fmt(c.y0) << ',';
      for (std::size_t i = 0; i < c.z0.size(); ++i) csv << (i ? ";" : "") << fmt(c.z0[i]);
      csv << ',' << fmt(c.wall_seconds) << '\n';
    }
  }

  {
    std::ofstream md(base + "_report.md");
    const auto& ladder = report.spec.ladder;
    auto table = [&](const char* title, auto err_of, auto rate_of) {
      md << "## " << title << "\n\n|  |";
      for (int nt : ladder) md << " N_T=" << nt << " |";
      md << " CR |\n|---|";
      for (std::size_t i = 0; i < ladder.size(); ++i) md << "---|";
      md << "---|\n";
      for (std::size_t ti = 0; ti < report.rates.size(); ++ti) {
        const TripleSpec& t = report.rates[ti].triple;
        md << "| K_y=" << t.k_y << ", K_z=" << t.k_z << ", q=" << t.q << " |";
        for (std::size_t li = 0; li < ladder.size(); ++li) {
          const CellResult& c = report.cells[ti * ladder.size() + li];
          md << ' ' << (c.ok ? sci(err_of(c)) : std::string("--")) << " |";
        }
        auto rate = rate_of(report.rates[ti]);
        if (rate)
          md << ' ' << std::round(*rate * 100.0) / 100.0 << " |\n";
        else
          md << " -- |\n";
      }
      md << "\n";
    };
    md << "# " << report.spec.tag << ": errors and convergence rates\n\n";
    table("|Y_0 - y_0^0|", [](const CellResult& c) { return c.err_y; },
          [](const TripleRates& r) { return r.rate_y; });
    table("|Z_0 - z_0^0| (component average)", [](const CellResult& c) { return c.err_z; },
          [](const TripleRates& r) { return r.rate_z; });
    for (const TripleRates& r : report.rates)
      if (!r.excluded_n_t.empty()) {
        md << "Excluded from the rate fit (below the 1e-14 error floor): K_y=" << r.triple.k_y
           << ", K_z=" << r.triple.k_z << " at N_T in {";
        for (std::size_t i = 0; i < r.excluded_n_t.size(); ++i)
          md << (i ? ", " : "") << r.excluded_n_t[i];
        md << "}\n";
      }
  }

  for (const char* which : {"y", "z"}) {
    std::ofstream plot(base + std::string("_plot_") + which + ".dat");
    plot << "# log2(n_t)  log2(error); one series per (k_y,k_z,q) triple\n";
    for (std::size_t ti = 0; ti < report.rates.size(); ++ti) {
      const TripleSpec& t = report.rates[ti].triple;
      plot << "# series k_y=" << t.k_y << " k_z=" << t.k_z << " q=" << t.q << '\n';
      for (std::size_t li = 0; li < report.spec.ladder.size(); ++li) {
        const CellResult& c = report.cells[ti * report.spec.ladder.size() + li];
        if (!c.ok) continue;
        const double err = which[0] == 'y' ? c.err_y : c.err_z;
        if (err <= 0.0) continue;
        plot << fmt(std::log2(static_cast<double>(c.n_t))) << ' ' << fmt(std::log2(err)) << '\n';
      }
      plot << '\n';
    }
  }
}

std::vector<CellResult> parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_report_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) parts.push_back(field);
    if (parts.size() != 11) throw std::runtime_error("parse_report_csv: malformed row");
    CellResult c;
    c.triple.k_y = std::stoi(parts[1]);
    c.triple.k_z = std::stoi(parts[2]);
    c.triple.q = std::stoi(parts[3]);
    c.n_t = std::stoi(parts[4]);
    c.ok = parts[5] == "ok";
    if (!c.ok) c.error = parts[5];
    c.err_y = std::strtod(parts[6].c_str(), nullptr);
    c.err_z = std::strtod(parts[7].c_str(), nullptr);
    c.y0 = std::strtod(parts[8].c_str(), nullptr);
    std::stringstream zs(parts[9]);
    while (std::getline(zs, field, ';'))
      if (!field.empty()) c.z0.push_back(std::strtod(field.c_str(), nullptr));
    c.wall_seconds = std::strtod(parts[10].c_str(), nullptr);
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace bsde
