#include "bsde/space_grid.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace bsde {

void SpaceGrid::unflatten(std::size_t node, std::span<int> idx) const {
  for (int a = d - 1; a >= 0; --a) {
    std::size_t n = static_cast<std::size_t>(nodes_per_axis(a));
    idx[static_cast<std::size_t>(a)] = static_cast<int>(node % n);
    node /= n;
  }
}

SpaceGrid build_grid(int d, double lower, double upper, double dx_target) {
  if (d < 1) throw std::invalid_argument("build_grid: dimension must be positive");
  if (!std::isfinite(lower) || !std::isfinite(upper) || lower >= upper)
    throw std::invalid_argument("build_grid: bounds must be finite with lower < upper");
  if (!(dx_target > 0.0)) throw std::invalid_argument("build_grid: dx_target must be positive");
  const double span = upper - lower;
  if (dx_target > span) throw std::invalid_argument("build_grid: dx_target larger than domain");

  int n = static_cast<int>(std::llround(span / dx_target));
  if (n < 4) n = 4;

  SpaceGrid g;
  g.d = d;
  g.lower.assign(static_cast<std::size_t>(d), lower);
  g.upper.assign(static_cast<std::size_t>(d), upper);
  g.dx.assign(static_cast<std::size_t>(d), span / n);
  g.n_cells.assign(static_cast<std::size_t>(d), n);
  return g;
}

double dx_from_h(double h, int q) {
  if (!(h > 0.0)) throw std::invalid_argument("dx_from_h: h must be positive");
  if (q < 1) throw std::invalid_argument("dx_from_h: q must be at least 1");
  return std::pow(h, (q + 1) / 4.0);
}

bool SolutionLevel::all_finite() const {
  for (double v : y)
    if (!std::isfinite(v)) return false;
  for (double v : z)
    if (!std::isfinite(v)) return false;
  return true;
}

void write_level(const std::string& path, const SpaceGrid& grid, const SolutionLevel& level,
                 double time) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_level: cannot open " + path);
  out.precision(17);
  out << "# time_index=" << level.time_index << " t=" << time << " d=" << grid.d
      << " m=" << level.m << " columns: x[0.." << grid.d << ") y[0.." << level.m << ") z[0.."
      << level.m * grid.d << ")\n";
  std::vector<int> idx(static_cast<std::size_t>(grid.d));
  for (std::size_t node = 0; node < level.n_nodes; ++node) {
    grid.unflatten(node, idx);
    for (int a = 0; a < grid.d; ++a) out << grid.coordinate(a, idx[static_cast<std::size_t>(a)]) << ' ';
    for (int c = 0; c < level.m; ++c) out << level.y[node * static_cast<std::size_t>(level.m) + static_cast<std::size_t>(c)] << ' ';
    const std::size_t zs = static_cast<std::size_t>(level.m) * static_cast<std::size_t>(grid.d);
    for (std::size_t c = 0; c < zs; ++c) out << level.z[node * zs + c] << (c + 1 == zs ? '\n' : ' ');
  }
}

}  // namespace bsde
