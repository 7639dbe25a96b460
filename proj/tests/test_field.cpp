#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bsde/interpolant.hpp"
#include "bsde/space_grid.hpp"

using bsde::Extrapolation;
using bsde::FieldInterpolant;
using bsde::SolutionLevel;
using bsde::SpaceGrid;

namespace {

SolutionLevel sampled_level_1d(const SpaceGrid& g, double (*f)(double), double (*df)(double)) {
  SolutionLevel level(0, 1, 1, g.num_nodes());
  for (int i = 0; i <= g.n_cells[0]; ++i) {
    level.y[static_cast<std::size_t>(i)] = f(g.coordinate(0, i));
    level.z[static_cast<std::size_t>(i)] = df(g.coordinate(0, i));
  }
  return level;
}

double max_interp_error_1d(double dx, double (*f)(double)) {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, dx);
  SolutionLevel level(0, 1, 1, g.num_nodes());
  for (int i = 0; i <= g.n_cells[0]; ++i) level.y[static_cast<std::size_t>(i)] = f(g.coordinate(0, i));
  FieldInterpolant interp(g, level);
  double worst = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    double x = -7.5 + 15.0 * k / 2000.0;
    double rho = (x - g.lower[0]) / g.dx[0];
    worst = std::max(worst, std::abs(interp.eval_field1(0, rho) - f(x)));
  }
  return worst;
}

}  // namespace

TEST_CASE("build_grid snapping") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 1.0);
  CHECK(g.n_cells[0] == 16);
  CHECK(g.num_nodes() == 17);
  CHECK(g.coordinate(0, 0) == -8.0);
  CHECK(g.coordinate(0, 16) == doctest::Approx(8.0));

  g = bsde::build_grid(1, -8.0, 8.0, 0.33);
  CHECK(g.n_cells[0] == 48);
  CHECK(g.dx[0] == doctest::Approx(1.0 / 3.0));

  g = bsde::build_grid(2, -8.0, 8.0, 1.0);
  CHECK(g.num_nodes() == 17 * 17);

  CHECK_THROWS_AS(bsde::build_grid(1, 8.0, -8.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bsde::build_grid(1, -8.0, 8.0, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(bsde::build_grid(1, -8.0, 8.0, 0.0), std::invalid_argument);

  // uniform spacing, within one ulp across the whole axis
  g = bsde::build_grid(1, -8.0, 8.0, 0.37);
  for (int i = 0; i < g.n_cells[0]; ++i)
    CHECK(g.coordinate(0, i + 1) - g.coordinate(0, i) == doctest::Approx(g.dx[0]).epsilon(1e-12));
}

TEST_CASE("dx_from_h") {
  CHECK(bsde::dx_from_h(1.0 / 16.0, 3) == doctest::Approx(1.0 / 16.0));
  CHECK(bsde::dx_from_h(1.0 / 16.0, 1) == doctest::Approx(0.25));
  CHECK(bsde::dx_from_h(1.0 / 8.0, 4) == doctest::Approx(std::pow(1.0 / 8.0, 1.25)));
  CHECK(bsde::dx_from_h(1.0 / 8.0, 4) == doctest::Approx(0.0743254).epsilon(1e-5));
  CHECK_THROWS_AS(bsde::dx_from_h(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(bsde::dx_from_h(0.5, 0), std::invalid_argument);
}

TEST_CASE("node reproduction is exact") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 0.25);
  SolutionLevel level = sampled_level_1d(
      g, [](double x) { return std::sin(x) * std::exp(0.1 * x); },
      [](double x) { return std::cos(x); });
  FieldInterpolant interp(g, level);
  for (int i = 0; i <= g.n_cells[0]; ++i) {
    CHECK(interp.eval_field1(0, static_cast<double>(i)) == level.y[static_cast<std::size_t>(i)]);
    CHECK(interp.eval_field1(1, static_cast<double>(i)) == level.z[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("1-d interpolation error on sin(x)") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 0.25);
  SolutionLevel level(0, 1, 1, g.num_nodes());
  for (int i = 0; i <= g.n_cells[0]; ++i) level.y[static_cast<std::size_t>(i)] = std::sin(g.coordinate(0, i));
  FieldInterpolant interp(g, level);
  double rho = (0.1 - g.lower[0]) / g.dx[0];
  CHECK(std::abs(interp.eval_field1(0, rho) - std::sin(0.1)) < 1e-5);

  double worst = max_interp_error_1d(0.25, [](double x) { return std::sin(x); });
  CHECK(worst < 3e-5);  // fourth order over the whole domain, C dx^4
}

TEST_CASE("empirical fourth-order refinement factor in [12, 20]") {
  double coarse = max_interp_error_1d(0.25, [](double x) { return std::sin(x); });
  double fine = max_interp_error_1d(0.125, [](double x) { return std::sin(x); });
  double factor = coarse / fine;
  CHECK(factor > 12.0);
  CHECK(factor < 20.0);
}

TEST_CASE("2-d tensor interpolation of sin(x1 + x2)") {
  SpaceGrid g = bsde::build_grid(2, -8.0, 8.0, 0.25);
  const int n1 = g.nodes_per_axis(1);
  SolutionLevel level(0, 1, 2, g.num_nodes());
  for (int i0 = 0; i0 < g.nodes_per_axis(0); ++i0)
    for (int i1 = 0; i1 < n1; ++i1) {
      double v = std::sin(g.coordinate(0, i0) + g.coordinate(1, i1));
      level.y[static_cast<std::size_t>(i0 * n1 + i1)] = v;
      level.z[static_cast<std::size_t>(2 * (i0 * n1 + i1))] = v;
      level.z[static_cast<std::size_t>(2 * (i0 * n1 + i1) + 1)] = -v;
    }
  FieldInterpolant interp(g, level);

  double pt[2] = {0.1, -0.2};
  double y, z[2];
  interp.eval(std::span<const double>(pt, 2), std::span<double>(&y, 1), std::span<double>(z, 2));
  CHECK(std::abs(y - std::sin(-0.1)) < 1e-5);
  CHECK(std::abs(z[0] - std::sin(-0.1)) < 1e-5);
  CHECK(std::abs(z[1] + std::sin(-0.1)) < 1e-5);

  // node reproduction in 2-d is exact as well
  double node_pt[2] = {g.coordinate(0, 3), g.coordinate(1, 5)};
  interp.eval(std::span<const double>(node_pt, 2), std::span<double>(&y, 1), std::span<double>(z, 2));
  CHECK(y == level.y[static_cast<std::size_t>(3 * n1 + 5)]);

  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    double a = -6.0 + 12.0 * k / 199.0;
    double b = 6.0 - 12.5 * k / 199.0;
    double got = interp.eval_field2(0, (a - g.lower[0]) / g.dx[0], (b - g.lower[1]) / g.dx[1]);
    worst = std::max(worst, std::abs(got - std::sin(a + b)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("extrapolation is continuous at the boundary and clamp mode is available") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 0.5);
  SolutionLevel level = sampled_level_1d(
      g, [](double x) { return std::cos(0.3 * x); }, [](double) { return 0.0; });

  FieldInterpolant poly(g, level, Extrapolation::PolynomialExtension);
  const double rho_edge = static_cast<double>(g.n_cells[0]);
  double inside = poly.eval_field1(0, rho_edge - 1e-9);
  double outside = poly.eval_field1(0, rho_edge + 1e-9);
  CHECK(std::abs(inside - outside) < 1e-7);
  // cubic extension keeps moving beyond the boundary
  CHECK(poly.eval_field1(0, rho_edge + 2.0) != doctest::Approx(level.y.back()).epsilon(1e-6));

  FieldInterpolant clamp(g, level, Extrapolation::ClampToBoundary);
  CHECK(clamp.eval_field1(0, rho_edge + 2.0) == level.y.back());
  CHECK(clamp.eval_field1(0, -3.0) == level.y.front());
  // clamp mode is continuous at the boundary too
  CHECK(std::abs(clamp.eval_field1(0, rho_edge - 1e-9) - clamp.eval_field1(0, rho_edge + 1e-9)) <
        1e-7);
}

TEST_CASE("node_gradient differentiates the spline") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 0.25);
  SolutionLevel level = sampled_level_1d(
      g, [](double x) { return std::sin(x); }, [](double) { return 0.0; });
  FieldInterpolant interp(g, level);
  std::vector<double> grad = interp.node_gradient(0, 0);
  double worst = 0.0;
  for (int i = 4; i <= g.n_cells[0] - 4; ++i)
    worst = std::max(worst, std::abs(grad[static_cast<std::size_t>(i)] - std::cos(g.coordinate(0, i))));
  CHECK(worst < 1e-4);  // nodal spline derivative is third-order accurate

  // linear data: gradient is exact everywhere including the ends
  SolutionLevel lin = sampled_level_1d(
      g, [](double x) { return 2.0 * x + 1.0; }, [](double) { return 0.0; });
  FieldInterpolant ilin(g, lin);
  std::vector<double> glin = ilin.node_gradient(0, 0);
  for (double v : glin) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("level dump writes a documented header and data rows") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 2.0);
  SolutionLevel level = sampled_level_1d(
      g, [](double x) { return x; }, [](double) { return 1.0; });
  auto path = std::filesystem::temp_directory_path() / "bsde_level_test.dat";
  bsde::write_level(path.string(), g, level, 0.5);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header.find("columns") != std::string::npos);
  std::size_t rows = 0;
  double x, y, z;
  while (in >> x >> y >> z) ++rows;
  CHECK(rows == g.num_nodes());
  std::filesystem::remove(path);
}

TEST_CASE("solution level finiteness check") {
  SpaceGrid g = bsde::build_grid(1, -8.0, 8.0, 2.0);
  SolutionLevel level(0, 1, 1, g.num_nodes());
  CHECK(level.all_finite());
  level.y[3] = std::nan("");
  CHECK_FALSE(level.all_finite());
}
