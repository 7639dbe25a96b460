#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bsde/convergence.hpp"

using bsde::ExperimentSpec;
using bsde::TripleSpec;

TEST_CASE("fit_rate basics") {
  std::vector<double> e1{1.0, 0.5, 0.25};
  std::vector<int> n1{8, 16, 32};
  CHECK(bsde::fit_rate(e1, n1) == doctest::Approx(1.0).epsilon(1e-13));

  std::vector<double> e2{1.0, 1.0 / 16.0};
  std::vector<int> n2{8, 16};
  CHECK(bsde::fit_rate(e2, n2) == doctest::Approx(4.0).epsilon(1e-13));

  // reference table row (3,3,3): CR printed as 3.32
  std::vector<double> row{2.30e-07, 2.52e-08, 1.79e-09, 2.58e-10, 2.29e-11};
  std::vector<int> nts{8, 16, 32, 64, 128};
  CHECK(bsde::fit_rate(row, nts) == doctest::Approx(3.32).epsilon(2e-3));

  CHECK_THROWS_AS(bsde::fit_rate(std::vector<double>{1.0}, std::vector<int>{8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(bsde::fit_rate(std::vector<double>{1.0, 0.0}, std::vector<int>{8, 16}),
                  std::invalid_argument);
  CHECK_THROWS_AS(bsde::fit_rate(std::vector<double>{1.0, -1.0}, std::vector<int>{8, 16}),
                  std::invalid_argument);
}

TEST_CASE("fit_rate is invariant under uniform error scaling") {
  std::vector<double> e{3.1e-3, 8.2e-4, 2.2e-4, 6.1e-5};
  std::vector<int> n{8, 16, 32, 64};
  double base = bsde::fit_rate(e, n);
  for (double scale : {2.0, 1024.0, 1.0 / 4096.0}) {
    std::vector<double> scaled = e;
    for (double& v : scaled) v *= scale;
    CHECK(bsde::fit_rate(scaled, n) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("experiment spec validation") {
  ExperimentSpec spec;
  spec.triples = {TripleSpec{1, 1, 1}};
  spec.ladder = {8, 8};
  CHECK_THROWS_AS(bsde::run_experiment(spec), std::invalid_argument);

  spec.ladder = {16, 8};
  CHECK_THROWS_AS(bsde::run_experiment(spec), std::invalid_argument);

  spec.triples = {TripleSpec{6, 6, 3}};
  spec.ladder = {6, 8};  // n_t must be >= max(k_y, k_z) + 1
  CHECK_THROWS_AS(bsde::run_experiment(spec), std::invalid_argument);

  spec.triples.clear();
  spec.ladder = {8};
  CHECK_THROWS_AS(bsde::run_experiment(spec), std::invalid_argument);
}

TEST_CASE("run_experiment on Example 1 (1,1,1) reproduces the reference row") {
  ExperimentSpec spec;
  spec.problem = "example1";
  spec.triples = {TripleSpec{1, 1, 1}};
  spec.ladder = {8, 16, 32, 64};
  spec.tag = "ex1_smoke";
  bsde::ConvergenceReport report = bsde::run_experiment(spec);
  REQUIRE(report.cells.size() == 4);

  const double want_y[] = {3.40e-04, 8.90e-05, 2.48e-05, 7.37e-06};
  const double want_z[] = {1.71e-02, 8.52e-03, 4.25e-03, 2.12e-03};
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(report.cells[i].ok);
    CHECK(report.cells[i].err_y == doctest::Approx(want_y[i]).epsilon(0.35));
    CHECK(report.cells[i].err_z == doctest::Approx(want_z[i]).epsilon(0.35));
  }
  REQUIRE(report.rates.size() == 1);
  REQUIRE(report.rates[0].rate_y.has_value());
  CHECK(*report.rates[0].rate_y == doctest::Approx(1.78).epsilon(0.2));
  CHECK(*report.rates[0].rate_z == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("run_experiment on Example 2 (1,2,2) over the full ladder") {
  ExperimentSpec spec;
  spec.problem = "example2";
  spec.triples = {TripleSpec{1, 2, 2}};
  spec.ladder = {8, 16, 32, 64, 128};
  bsde::ConvergenceReport report = bsde::run_experiment(spec);
  REQUIRE(report.cells.size() == 5);
  for (const auto& cell : report.cells) REQUIRE(cell.ok);
  // reference row: Y error 5.22e-05 at n_t = 128, fitted rate 2.02
  CHECK(report.cells[4].err_y == doctest::Approx(5.22e-05).epsilon(0.3));
  REQUIRE(report.rates[0].rate_y.has_value());
  CHECK(*report.rates[0].rate_y == doctest::Approx(2.02).epsilon(0.08));
}

TEST_CASE("single-point ladder produces no rate") {
  ExperimentSpec spec;
  spec.problem = "example1";
  spec.triples = {TripleSpec{1, 1, 1}};
  spec.ladder = {8};
  bsde::ConvergenceReport report = bsde::run_experiment(spec);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].ok);
  CHECK_FALSE(report.rates[0].rate_y.has_value());
  CHECK_FALSE(report.rates[0].rate_z.has_value());
}

TEST_CASE("sub-ladder cells equal the corresponding full-run cells bitwise") {
  ExperimentSpec spec;
  spec.problem = "example1";
  spec.triples = {TripleSpec{2, 2, 2}};
  spec.ladder = {8, 16};
  bsde::ConvergenceReport full = bsde::run_experiment(spec);
  spec.ladder = {8};
  bsde::ConvergenceReport sub = bsde::run_experiment(spec);
  CHECK(sub.cells[0].y0 == full.cells[0].y0);
  CHECK(sub.cells[0].err_y == full.cells[0].err_y);
  CHECK(sub.cells[0].z0[0] == full.cells[0].z0[0]);
}

TEST_CASE("cell failures are recorded without aborting the run") {
  ExperimentSpec spec;
  spec.problem = "example1";
  spec.bootstrap = bsde::BootstrapMode::IterativeRampUp;
  spec.quad_order = 200;  // out of range -> every cell fails, run survives
  spec.triples = {TripleSpec{1, 1, 1}};
  spec.ladder = {8, 16};
  bsde::ConvergenceReport report = bsde::run_experiment(spec);
  REQUIRE(report.cells.size() == 2);
  CHECK_FALSE(report.cells[0].ok);
  CHECK(!report.cells[0].error.empty());
  CHECK_FALSE(report.rates[0].rate_y.has_value());
}

TEST_CASE("emit_report writes csv/markdown/plot data and the csv round-trips") {
  namespace fs = std::filesystem;
  ExperimentSpec spec;
  spec.problem = "example1";
  spec.triples = {TripleSpec{1, 1, 1}, TripleSpec{1, 2, 2}};
  spec.ladder = {8, 16, 32, 64, 128};
  spec.tag = "emit_test";
  bsde::ConvergenceReport report = bsde::run_experiment(spec);

  fs::path dir = fs::temp_directory_path() / "bsde_emit_test";
  fs::remove_all(dir);
  bsde::emit_report(report, dir.string());

  // CSV: header + one row per cell, and numerically exact round trip
  std::ifstream csv(dir / "emit_test_report.csv");
  REQUIRE(csv.good());
  std::size_t lines = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 1 + report.cells.size());

  auto parsed = bsde::parse_report_csv((dir / "emit_test_report.csv").string());
  REQUIRE(parsed.size() == report.cells.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].err_y == report.cells[i].err_y);
    CHECK(parsed[i].err_z == report.cells[i].err_z);
    CHECK(parsed[i].y0 == report.cells[i].y0);
    REQUIRE(parsed[i].z0.size() == report.cells[i].z0.size());
    for (std::size_t k = 0; k < parsed[i].z0.size(); ++k)
      CHECK(parsed[i].z0[k] == report.cells[i].z0[k]);
    CHECK(parsed[i].wall_seconds == report.cells[i].wall_seconds);
    CHECK(parsed[i].n_t == report.cells[i].n_t);
  }

  // markdown carries the CR column
  std::ifstream md(dir / "emit_test_report.md");
  REQUIRE(md.good());
  std::string all((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
  CHECK(all.find("CR") != std::string::npos);
  CHECK(all.find("N_T=128") != std::string::npos);

  // plot data: one series per triple
  std::ifstream plot(dir / "emit_test_plot_y.dat");
  REQUIRE(plot.good());
  std::size_t series = 0;
  while (std::getline(plot, line))
    if (line.rfind("# series", 0) == 0) ++series;
  CHECK(series == spec.triples.size());

  fs::remove_all(dir);
}

TEST_CASE("config file parsing") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "bsde_spec_test.json";
  {
    std::ofstream out(path);
    out << R"({
      "problem": "example2",
      "triples": [[1, 1, 1], {"k_y": 2, "k_z": 3, "q": 3}],
      "ladder": [8, 16],
      "quad_order": 10,
      "k2_variant": "natural",
      "bootstrap": "fine",
      "fine_substeps": 32,
      "tag": "parse_check"
    })";
  }
  ExperimentSpec spec = bsde::load_experiment_spec(path.string());
  CHECK(spec.problem == "example2");
  REQUIRE(spec.triples.size() == 2);
  CHECK(spec.triples[1].k_y == 2);
  CHECK(spec.triples[1].k_z == 3);
  CHECK(spec.ladder == std::vector<int>{8, 16});
  CHECK(spec.quad_order == 10);
  CHECK(spec.k2_variant == bsde::SplineKind::NaturalCubic);
  CHECK(spec.bootstrap == bsde::BootstrapMode::FineOneStep);
  CHECK(spec.fine_substeps == 32);
  CHECK(spec.tag == "parse_check");
  fs::remove(path);

  CHECK_THROWS(bsde::load_experiment_spec("/nonexistent/path.json"));
}

TEST_CASE("make_problem rejects unknown names") {
  ExperimentSpec spec;
  spec.problem = "nope";
  CHECK_THROWS_AS(bsde::make_problem(spec), std::invalid_argument);
}
