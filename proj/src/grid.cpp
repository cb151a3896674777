#include "npp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace npp {

Grid Grid::build(int dimension, const std::vector<int>& cells_per_axis,
                 const std::vector<double>& domain_extent) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("grid dimension must be 1 or 2, got " +
                                std::to_string(dimension));
  if ((int)cells_per_axis.size() != dimension || (int)domain_extent.size() != dimension)
    throw std::invalid_argument("cells_per_axis/domain_extent size must match dimension");

  Grid g;
  g.dim_ = dimension;
  for (int a = 0; a < dimension; ++a) {
    if (cells_per_axis[a] < 2)
      throw std::invalid_argument("need at least 2 cells per axis");
    if (!(domain_extent[a] > 0.0))
      throw std::invalid_argument("domain extent must be positive");
    g.n_[a] = cells_per_axis[a];
    g.extent_[a] = domain_extent[a];
    g.h_[a] = domain_extent[a] / cells_per_axis[a];
  }

  const int nx = g.n_[0];
  const int ny = (dimension == 2) ? g.n_[1] : 1;
  g.num_cells_ = nx * ny;
  g.cell_volume_ = (dimension == 2) ? g.h_[0] * g.h_[1] : g.h_[0];

  const double area_x = (dimension == 2) ? g.h_[1] : 1.0;  // faces with x-normal
  const double area_y = g.h_[0];                           // faces with y-normal

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i)
      g.interior_.push_back({g.cell_index(i, j), g.cell_index(i + 1, j), area_x, 0});
  }
  if (dimension == 2) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i < nx; ++i)
        g.interior_.push_back({g.cell_index(i, j), g.cell_index(i, j + 1), area_y, 1});
    }
  }

  for (int j = 0; j < ny; ++j) {
    g.boundary_.push_back({g.cell_index(0, j), 0, -1, area_x});
    g.boundary_.push_back({g.cell_index(nx - 1, j), 0, +1, area_x});
  }
  if (dimension == 2) {
    for (int i = 0; i < nx; ++i) {
      g.boundary_.push_back({g.cell_index(i, 0), 1, -1, area_y});
      g.boundary_.push_back({g.cell_index(i, ny - 1), 1, +1, area_y});
    }
  }
  return g;
}

std::array<int, 2> Grid::cell_coords(int cell) const {
  return {cell % n_[0], cell / n_[0]};
}

std::array<double, 2> Grid::cell_center(int cell) const {
  auto [i, j] = cell_coords(cell);
  return {(i + 0.5) * h_[0], dim_ == 2 ? (j + 0.5) * h_[1] : 0.0};
}

int Grid::boundary_layer(int cell) const {
  auto [i, j] = cell_coords(cell);
  int layer = std::min(i, n_[0] - 1 - i);
  if (dim_ == 2) layer = std::min({layer, j, n_[1] - 1 - j});
  return layer;
}

namespace {

double profile_value(CutoffProfile profile, double s) {
  // s in [0,1]; both profiles are C1 with zero slope at the endpoints.
  if (profile == CutoffProfile::PlateauCosine)
    return 0.5 * (1.0 - std::cos(std::numbers::pi * s));
  return s * s * (3.0 - 2.0 * s);
}

}  // namespace

CutoffField build_cutoff(const Grid& grid, int support_margin, CutoffProfile profile) {
  if (support_margin < 1)
    throw std::invalid_argument("cutoff support_margin must be >= 1");

  int deepest = 0;
  for (int c = 0; c < grid.num_cells(); ++c)
    deepest = std::max(deepest, grid.boundary_layer(c));
  if (support_margin > deepest)
    throw std::invalid_argument("cutoff margin " + std::to_string(support_margin) +
                                " leaves no interior plateau (deepest layer " +
                                std::to_string(deepest) + ")");

  CutoffField zeta;
  zeta.support_margin = support_margin;
  zeta.values.resize(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const double s = std::min(1.0, double(grid.boundary_layer(c)) / support_margin);
    zeta.values[c] = profile_value(profile, s);
  }
  return zeta;
}

}  // namespace npp
