#pragma once

#include <array>
#include <span>
#include <vector>

namespace npp {

/// Interior face joining two cells across `axis`. Stored flux orientation is
/// from cell_a (low side) to cell_b (high side).
struct InteriorFace {
  int cell_a;
  int cell_b;
  double area;
  int axis;
};

/// Boundary face owned by a single cell. sign is -1 on the low end of the
/// axis and +1 on the high end (direction of the outward normal).
struct BoundaryFace {
  int cell;
  int axis;
  int sign;
  double area;
};

/// Uniform structured cell mesh on a 1D interval or 2D box.
///
/// Cells are indexed j*nx + i. Immutable after build(); safe to share
/// read-only across threads.
class Grid {
public:
  static Grid build(int dimension, const std::vector<int>& cells_per_axis,
                    const std::vector<double>& domain_extent);

  int dimension() const { return dim_; }
  int num_cells() const { return num_cells_; }
  int cells(int axis) const { return n_[axis]; }
  double extent(int axis) const { return extent_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double cell_volume() const { return cell_volume_; }
  double domain_volume() const { return cell_volume_ * num_cells_; }

  std::span<const InteriorFace> interior_faces() const { return interior_; }
  std::span<const BoundaryFace> boundary_faces() const { return boundary_; }

  std::array<int, 2> cell_coords(int cell) const;
  int cell_index(int i, int j = 0) const { return j * n_[0] + i; }
  std::array<double, 2> cell_center(int cell) const;

  /// l-infinity distance from a cell to the boundary, in whole cell layers
  /// (0 for cells that touch the boundary).
  int boundary_layer(int cell) const;

  /// Volume of the dual (face) control volume used for gradient quadrature.
  double face_volume(const InteriorFace& f) const { return f.area * h_[f.axis]; }

private:
  int dim_ = 1;
  std::array<int, 2> n_{1, 1};
  std::array<double, 2> extent_{1.0, 1.0};
  std::array<double, 2> h_{1.0, 1.0};
  double cell_volume_ = 1.0;
  int num_cells_ = 0;
  std::vector<InteriorFace> interior_;
  std::vector<BoundaryFace> boundary_;
};

enum class CutoffProfile { PlateauCosine, PlateauPolynomial };

/// Compactly supported cell weight: exactly 0 on the outermost cell layer,
/// C1 rise across `support_margin` layers, exactly 1 on the interior plateau.
struct CutoffField {
  std::vector<double> values;
  int support_margin = 0;
};

/// Throws std::invalid_argument if the plateau would be empty
/// (support_margin deeper than the grid's innermost layer).
CutoffField build_cutoff(const Grid& grid, int support_margin, CutoffProfile profile);

}  // namespace npp
