#include "nsgrf/assembly.hpp"

namespace nsgrf::reference {

SparseMatrix assemble_AH_serial(const GridSpec& grid, const AnisotropySpec& spec) {
  const double hx = grid.step_x();
  const double hy = grid.step_y();
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(16 * grid.size());
  for (std::size_t row = 0; row < grid.size(); ++row) {
    const CellCoord c = cell_of_index(grid, row);
    const long i = c.i, j = c.j;
    auto add = [&](long ii, long jj, double v) {
      t.emplace_back(static_cast<int>(row), static_cast<int>(linear_index(grid, {ii, jj})), v);
    };
    const FaceCenters f = face_centers(grid, c);
    const Sym2 R = eval_H(spec, f.right);
    const Sym2 T = eval_H(spec, f.top);
    const Sym2 L = eval_H(spec, f.left);
    const Sym2 B = eval_H(spec, f.bottom);

    // flux through each face: face length * (H n)ᵀ ∇u with the face difference schemes
    // right face, n = (1, 0)
    add(i + 1, j, hy * R.h11 / hx);
    add(i, j, -hy * R.h11 / hx);
    for (auto [di, dj, s] : {std::tuple{0, 1, 1.0}, {1, 1, 1.0}, {0, -1, -1.0}, {1, -1, -1.0}}) {
      add(i + di, j + dj, s * hy * R.h12 / (4 * hy));
    }
    // top face, n = (0, 1)
    for (auto [di, dj, s] : {std::tuple{1, 1, 1.0}, {1, 0, 1.0}, {-1, 1, -1.0}, {-1, 0, -1.0}}) {
      add(i + di, j + dj, s * hx * T.h12 / (4 * hx));
    }
    add(i, j + 1, hx * T.h22 / hy);
    add(i, j, -hx * T.h22 / hy);
    // left face, n = (-1, 0)
    add(i - 1, j, hy * L.h11 / hx);
    add(i, j, -hy * L.h11 / hx);
    for (auto [di, dj, s] : {std::tuple{0, -1, 1.0}, {-1, -1, 1.0}, {-1, 1, -1.0}, {0, 1, -1.0}}) {
      add(i + di, j + dj, s * hy * L.h12 / (4 * hy));
    }
    // bottom face, n = (0, -1)
    for (auto [di, dj, s] : {std::tuple{-1, 0, 1.0}, {-1, -1, 1.0}, {1, 0, -1.0}, {1, -1, -1.0}}) {
      add(i + di, j + dj, s * hx * B.h12 / (4 * hx));
    }
    add(i, j - 1, hx * B.h22 / hy);
    add(i, j, -hx * B.h22 / hy);
  }
  const int n = static_cast<int>(grid.size());
  SparseMatrix a_h(n, n);
  a_h.setFromTriplets(t.begin(), t.end());
  return a_h;
}

SparseMatrix precision_serial(const GridSpec& grid, double kappa_sq, const AnisotropySpec& spec) {
  const int n = static_cast<int>(grid.size());
  SparseMatrix shift(n, n);
  shift.setIdentity();
  shift *= grid.cell_area() * kappa_sq;
  const SparseMatrix a = shift - assemble_AH_serial(grid, spec);
  const SparseMatrix at = a.transpose();
  SparseMatrix q = (at * a).pruned(0.0, 0.0);
  q /= grid.cell_area();
  return q;
}

Eigen::VectorXd inverse_diagonal_by_columns(const SupernodalCholesky& factor) {
  const Eigen::Index n = static_cast<Eigen::Index>(factor.rows());
  Eigen::VectorXd diag(n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e[k] = 1.0;
    diag[k] = factor.solve(e)[k];
    e[k] = 0.0;
  }
  return diag;
}

}  // namespace nsgrf::reference
