#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nsgrf/grid.hpp"

using namespace nsgrf;

TEST_SUITE("grid") {

TEST_CASE("linear index is j*M + i with periodic wrap") {
  const GridSpec g(4.0, 4.0, 4, 4);
  CHECK(linear_index(g, {0, 0}) == 0);
  CHECK(linear_index(g, {2, 1}) == 6);
  CHECK(linear_index(g, {-1, 0}) == 3);
  CHECK(linear_index(g, {0, -1}) == 12);
  CHECK(linear_index(g, {5, 9}) == linear_index(g, {1, 1}));
}

TEST_CASE("linear index is a bijection") {
  const GridSpec g(3.0, 2.0, 7, 5);
  std::vector<std::size_t> seen;
  for (long j = 0; j < 5; ++j) {
    for (long i = 0; i < 7; ++i) {
      const auto k = linear_index(g, {i, j});
      seen.push_back(k);
      const CellCoord c = cell_of_index(g, k);
      CHECK(c.i == i);
      CHECK(c.j == j);
    }
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == k);
}

TEST_CASE("cell centres") {
  const GridSpec g(20.0, 20.0, 200, 200);
  const Point c = cell_center(g, {99, 99});
  CHECK(c.x == doctest::Approx(9.95).epsilon(1e-14));
  CHECK(c.y == doctest::Approx(9.95).epsilon(1e-14));
  const Point o = cell_center(g, {0, 0});
  CHECK(o.x == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(o.y == doctest::Approx(0.05).epsilon(1e-14));

  const GridSpec small(3.0, 3.0, 3, 3);
  const Point s = cell_center(small, {1, 0});
  CHECK(s.x == doctest::Approx(1.5));
  CHECK(s.y == doctest::Approx(0.5));

  const GridSpec odd(7.0, 2.5, 9, 4);
  for (std::size_t k = 0; k < odd.size(); ++k) {
    const Point p = cell_center(odd, cell_of_index(odd, k));
    CHECK(p.x > 0.0);
    CHECK(p.x < odd.width());
    CHECK(p.y > 0.0);
    CHECK(p.y < odd.height());
  }
}

TEST_CASE("face centres are half-step shifts, wrapped") {
  const GridSpec g(20.0, 20.0, 200, 200);
  const FaceCenters f = face_centers(g, {0, 0});
  CHECK(f.right.x == doctest::Approx(0.1));
  CHECK(f.right.y == doctest::Approx(0.05));
  CHECK(f.top.x == doctest::Approx(0.05));
  CHECK(f.top.y == doctest::Approx(0.1));
  CHECK(f.left.x == 0.0);
  CHECK(f.left.y == doctest::Approx(0.05));
  CHECK(f.bottom.x == doctest::Approx(0.05));
  CHECK(f.bottom.y == 0.0);
}

TEST_CASE("shared faces agree exactly") {
  const GridSpec g(1.0, 2.0, 10, 6);
  for (long j = 0; j < 6; ++j) {
    for (long i = 0; i < 10; ++i) {
      const FaceCenters here = face_centers(g, {i, j});
      const FaceCenters right = face_centers(g, {i + 1, j});
      const FaceCenters up = face_centers(g, {i, j + 1});
      CHECK(here.right.x == right.left.x);
      CHECK(here.right.y == right.left.y);
      CHECK(here.top.x == up.bottom.x);
      CHECK(here.top.y == up.bottom.y);
    }
  }
  // left face of column 0 and right face of column M-1
  const FaceCenters first = face_centers(g, {0, 3});
  const FaceCenters last = face_centers(g, {9, 3});
  CHECK(first.left.x == last.right.x);
}

TEST_CASE("face x-coordinates lie on the lattice") {
  const GridSpec g(1.0, 1.0, 10, 10);
  for (long i = 0; i < 10; ++i) {
    const FaceCenters f = face_centers(g, {i, 0});
    for (double x : {f.right.x, f.left.x}) {
      const double scaled = x * 10.0;
      CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec(1.0, 1.0, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(1.0, 1.0, 5, 2), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(0.0, 1.0, 5, 5), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(1.0, -1.0, 5, 5), std::invalid_argument);
  const GridSpec g(20.0, 10.0, 100, 40);
  CHECK(g.step_x() * 100 == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(g.step_y() * 40 == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(g.cell_area() == doctest::Approx(0.2 * 0.25));
}

}
