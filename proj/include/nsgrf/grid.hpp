#pragma once

#include <array>
#include <cstddef>

namespace nsgrf {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Cell (column i, row j) of the grid. Indices are taken modulo the grid size.
struct CellCoord {
  long i = 0;
  long j = 0;
};

/// Face centres of one cell, in the order right, top, left, bottom.
struct FaceCenters {
  Point right;
  Point top;
  Point left;
  Point bottom;
};

/// Periodic regular M x N grid of rectangular cells covering [0,A] x [0,B].
///
/// Cell (i,j) is [i*hx, (i+1)*hx] x [j*hy, (j+1)*hy]; cells are stacked
/// row-wise, so cell (i,j) has linear index j*M + i. Opposite edges of the
/// rectangle are identified.
class GridSpec {
 public:
  /// Throws std::invalid_argument unless width, height > 0 and M, N >= 3.
  GridSpec(double width, double height, std::size_t cells_x, std::size_t cells_y);

  double width() const { return width_; }
  double height() const { return height_; }
  std::size_t cells_x() const { return cells_x_; }
  std::size_t cells_y() const { return cells_y_; }
  std::size_t size() const { return cells_x_ * cells_y_; }
  double step_x() const { return step_x_; }
  double step_y() const { return step_y_; }
  double cell_area() const { return step_x_ * step_y_; }

  std::size_t wrap_i(long i) const;
  std::size_t wrap_j(long j) const;

  /// Wraps a coordinate pair into [0,A) x [0,B).
  Point wrap(Point p) const;

  bool operator==(const GridSpec&) const = default;

 private:
  double width_;
  double height_;
  std::size_t cells_x_;
  std::size_t cells_y_;
  double step_x_;
  double step_y_;
};

std::size_t linear_index(const GridSpec& grid, CellCoord c);
CellCoord cell_of_index(const GridSpec& grid, std::size_t index);

/// Point (p*hx/2, q*hy/2) of the half-step lattice, indices wrapped modulo 2M, 2N.
/// Cell centres sit at odd (p, q); face centres have exactly one even index.
Point half_step_point(const GridSpec& grid, long p, long q);

Point cell_center(const GridSpec& grid, CellCoord c);

FaceCenters face_centers(const GridSpec& grid, CellCoord c);

}  // namespace nsgrf
