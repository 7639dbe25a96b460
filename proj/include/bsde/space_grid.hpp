#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bsde {

/// Uniform truncated spatial grid, identical axes, nodes at
/// lower + i*dx for i = 0..n_cells. Supports general d; the solver runs
/// d = 1, 2 end to end.
struct SpaceGrid {
  int d = 1;
  std::vector<double> lower;    // per axis
  std::vector<double> upper;    // per axis
  std::vector<double> dx;       // per axis
  std::vector<int> n_cells;     // per axis; nodes per axis = n_cells + 1

  int nodes_per_axis(int axis) const { return n_cells[static_cast<std::size_t>(axis)] + 1; }
  std::size_t num_nodes() const {
    std::size_t n = 1;
    for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(nodes_per_axis(a));
    return n;
  }
  double coordinate(int axis, int i) const {
    return lower[static_cast<std::size_t>(axis)] + dx[static_cast<std::size_t>(axis)] * i;
  }
  /// Multi-index of a flat node id, row-major with axis 0 slowest.
  void unflatten(std::size_t node, std::span<int> idx) const;
};

/// dx snapped so (upper-lower)/dx is an integer: N is the integer nearest to
/// (upper-lower)/dx_target, clamped to at least 4 cells.
SpaceGrid build_grid(int d, double lower, double upper, double dx_target);

/// Space-time coupling rule (dx)^4 = h^{q+1}.
double dx_from_h(double h, int q);

/// The (y, z) field at one time level: y holds m values per node, z holds
/// m*d values per node (component-major within a node).
struct SolutionLevel {
  int time_index = 0;
  int m = 1;
  int d = 1;
  std::size_t n_nodes = 0;
  std::vector<double> y;  // n_nodes * m
  std::vector<double> z;  // n_nodes * m * d

  SolutionLevel() = default;
  SolutionLevel(int time_index_, int m_, int d_, std::size_t n_nodes_)
      : time_index(time_index_), m(m_), d(d_), n_nodes(n_nodes_),
        y(n_nodes_ * static_cast<std::size_t>(m_)),
        z(n_nodes_ * static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_)) {}

  bool all_finite() const;
};

/// Plain-text dump, one row per node: coordinates, y components, z components.
/// The header line documents the layout.
void write_level(const std::string& path, const SpaceGrid& grid, const SolutionLevel& level,
                 double time);

}  // namespace bsde
