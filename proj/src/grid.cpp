#include "nsgrf/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsgrf {

namespace {

double wrap_coordinate(double v, double period) {
  double r = v - period * std::floor(v / period);
  // floor can leave r == period after rounding when v is a tiny negative number
  if (r >= period || r < 0.0) r = 0.0;
  return r;
}

}  // namespace

GridSpec::GridSpec(double width, double height, std::size_t cells_x, std::size_t cells_y)
    : width_(width), height_(height), cells_x_(cells_x), cells_y_(cells_y) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
    throw std::invalid_argument("grid: domain width and height must be positive and finite");
  }
  if (cells_x < 3 || cells_y < 3) {
    throw std::invalid_argument("grid: at least 3 cells are required in each direction, got " +
                                std::to_string(cells_x) + "x" + std::to_string(cells_y));
  }
  step_x_ = width / static_cast<double>(cells_x);
  step_y_ = height / static_cast<double>(cells_y);
}

std::size_t GridSpec::wrap_i(long i) const {
  const long m = static_cast<long>(cells_x_);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

std::size_t GridSpec::wrap_j(long j) const {
  const long n = static_cast<long>(cells_y_);
  return static_cast<std::size_t>(((j % n) + n) % n);
}

Point GridSpec::wrap(Point p) const {
  return {wrap_coordinate(p.x, width_), wrap_coordinate(p.y, height_)};
}

std::size_t linear_index(const GridSpec& grid, CellCoord c) {
  return grid.wrap_j(c.j) * grid.cells_x() + grid.wrap_i(c.i);
}

CellCoord cell_of_index(const GridSpec& grid, std::size_t index) {
  return {static_cast<long>(index % grid.cells_x()), static_cast<long>(index / grid.cells_x())};
}

Point half_step_point(const GridSpec& grid, long p, long q) {
  const long pm = static_cast<long>(2 * grid.cells_x());
  const long qm = static_cast<long>(2 * grid.cells_y());
  const double pw = static_cast<double>(((p % pm) + pm) % pm);
  const double qw = static_cast<double>(((q % qm) + qm) % qm);
  return {pw * (0.5 * grid.step_x()), qw * (0.5 * grid.step_y())};
}

Point cell_center(const GridSpec& grid, CellCoord c) {
  const long i = static_cast<long>(grid.wrap_i(c.i));
  const long j = static_cast<long>(grid.wrap_j(c.j));
  return half_step_point(grid, 2 * i + 1, 2 * j + 1);
}

FaceCenters face_centers(const GridSpec& grid, CellCoord c) {
  const long p = 2 * static_cast<long>(grid.wrap_i(c.i)) + 1;
  const long q = 2 * static_cast<long>(grid.wrap_j(c.j)) + 1;
  return {half_step_point(grid, p + 1, q), half_step_point(grid, p, q + 1),
          half_step_point(grid, p - 1, q), half_step_point(grid, p, q - 1)};
}

}  // namespace nsgrf
