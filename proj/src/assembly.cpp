#include "nsgrf/assembly.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace nsgrf {

namespace {

inline constexpr int wide_slot(int dx, int dy) { return (dy + 2) * 5 + (dx + 2); }

}  // namespace

FaceTensors sample_H_on_faces(const GridSpec& grid, const AnisotropySpec& spec) {
  const long m = static_cast<long>(grid.cells_x());
  const long n = static_cast<long>(grid.cells_y());
  FaceTensors faces;
  faces.right.resize(grid.size());
  faces.top.resize(grid.size());
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i < m; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j * m + i);
      faces.right[idx] = eval_H(spec, half_step_point(grid, 2 * i + 2, 2 * j + 1));
      faces.top[idx] = eval_H(spec, half_step_point(grid, 2 * i + 1, 2 * j + 2));
    }
  }
  return faces;
}

StencilMatrix::StencilMatrix(GridSpec grid, std::vector<Row> rows)
    : grid_(grid), rows_(std::move(rows)) {
  if (rows_.size() != grid_.size()) throw std::invalid_argument("stencil: one row per cell required");
}

SparseMatrix StencilMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(9 * rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const CellCoord c = cell_of_index(grid_, r);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const std::size_t col = linear_index(grid_, {c.i + dx, c.j + dy});
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(col),
                              rows_[r][stencil_slot(dx, dy)]);
      }
    }
  }
  const int n = static_cast<int>(rows_.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

StencilMatrix assemble_AH(const GridSpec& grid, const FaceTensors& faces) {
  if (faces.right.size() != grid.size() || faces.top.size() != grid.size()) {
    throw std::invalid_argument("assemble_AH: face tensors do not match the grid");
  }
  const long m = static_cast<long>(grid.cells_x());
  const long n = static_cast<long>(grid.cells_y());
  const double ry = grid.step_y() / grid.step_x();
  const double rx = grid.step_x() / grid.step_y();
  std::vector<StencilMatrix::Row> rows(grid.size());
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j) {
    const long jp = (j + n - 1) % n;
    for (long i = 0; i < m; ++i) {
      const long ip = (i + m - 1) % m;
      const Sym2& R = faces.right[static_cast<std::size_t>(j * m + i)];
      const Sym2& L = faces.right[static_cast<std::size_t>(j * m + ip)];
      const Sym2& T = faces.top[static_cast<std::size_t>(j * m + i)];
      const Sym2& B = faces.top[static_cast<std::size_t>(jp * m + i)];
      auto& row = rows[static_cast<std::size_t>(j * m + i)];
      row[kStencilSelf] = -ry * (R.h11 + L.h11) - rx * (T.h22 + B.h22);
      row[stencil_slot(-1, 0)] = ry * L.h11 - 0.25 * (T.h12 - B.h12);
      row[stencil_slot(1, 0)] = ry * R.h11 + 0.25 * (T.h12 - B.h12);
      row[stencil_slot(0, 1)] = rx * T.h22 + 0.25 * (R.h12 - L.h12);
      row[stencil_slot(0, -1)] = rx * B.h22 - 0.25 * (R.h12 - L.h12);
      row[stencil_slot(-1, -1)] = 0.25 * (B.h12 + L.h12);
      row[stencil_slot(1, -1)] = -0.25 * (B.h12 + R.h12);
      row[stencil_slot(-1, 1)] = -0.25 * (T.h12 + L.h12);
      row[stencil_slot(1, 1)] = 0.25 * (T.h12 + R.h12);
    }
  }
  return StencilMatrix(grid, std::move(rows));
}

PrecisionPattern::PrecisionPattern(const GridSpec& grid) : grid_(grid) {
  const std::size_t n = grid.size();
  std::vector<int> outer(n + 1, 0);
  std::vector<int> inner;
  inner.reserve(25 * n);
  slots_.resize(n);
  std::vector<std::pair<int, int>> entries;  // (row, wide slot)
  for (std::size_t a = 0; a < n; ++a) {
    const CellCoord c = cell_of_index(grid, a);
    entries.clear();
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        entries.emplace_back(static_cast<int>(linear_index(grid, {c.i + dx, c.j + dy})),
                             wide_slot(dx, dy));
      }
    }
    std::sort(entries.begin(), entries.end());
    int last = -1;
    for (const auto& [row, slot] : entries) {
      if (row != last) {
        inner.push_back(row);
        last = row;
      }
      slots_[a][slot] = static_cast<int>(inner.size()) - 1;
    }
    outer[a + 1] = static_cast<int>(inner.size());
  }
  std::vector<double> zeros(inner.size(), 0.0);
  const int dim = static_cast<int>(n);
  pattern_ = Eigen::Map<const SparseMatrix>(dim, dim, static_cast<int>(inner.size()), outer.data(),
                                            inner.data(), zeros.data());
  pattern_.makeCompressed();
}

PrecisionModel::PrecisionModel(GridSpec grid, double kappa_sq, StencilMatrix a_h, SparseMatrix q)
    : grid_(grid), kappa_sq_(kappa_sq), a_h_(std::move(a_h)), q_(std::move(q)) {}

SparseMatrix PrecisionModel::operator_matrix() const {
  SparseMatrix a = -a_h_.to_sparse();
  const double shift = grid_.cell_area() * kappa_sq_;
  for (int k = 0; k < a.outerSize(); ++k) a.coeffRef(k, k) += shift;
  return a;
}

void fill_precision(const PrecisionPattern& pattern, const StencilMatrix& a_h, double kappa_sq,
                    SparseMatrix& q) {
  const GridSpec& grid = pattern.grid();
  if (a_h.size() != grid.size() || q.nonZeros() != pattern.matrix().nonZeros()) {
    throw std::invalid_argument("fill_precision: inputs do not match the pattern");
  }
  const double volume = grid.cell_area();
  const double shift = volume * kappa_sq;
  const double inv_volume = 1.0 / volume;
  const long n = static_cast<long>(grid.size());
  double* values = q.valuePtr();
#pragma omp parallel for schedule(static)
  for (long a = 0; a < n; ++a) {
    const CellCoord c = cell_of_index(grid, static_cast<std::size_t>(a));
    std::array<double, 25> acc{};
    for (int dy1 = -1; dy1 <= 1; ++dy1) {
      for (int dx1 = -1; dx1 <= 1; ++dx1) {
        const auto& r_row = a_h.row(linear_index(grid, {c.i + dx1, c.j + dy1}));
        // A(r, a) sits at offset -o1 in row r
        double a_ra = -r_row[stencil_slot(-dx1, -dy1)];
        if (dx1 == 0 && dy1 == 0) a_ra += shift;
        if (a_ra == 0.0) continue;
        for (int dy2 = -1; dy2 <= 1; ++dy2) {
          for (int dx2 = -1; dx2 <= 1; ++dx2) {
            double a_rb = -r_row[stencil_slot(dx2, dy2)];
            if (dx2 == 0 && dy2 == 0) a_rb += shift;
            acc[wide_slot(dx1 + dx2, dy1 + dy2)] += a_ra * a_rb;
          }
        }
      }
    }
    const auto& slots = pattern.slots(static_cast<std::size_t>(a));
    const int begin = q.outerIndexPtr()[a];
    const int end = q.outerIndexPtr()[a + 1];
    std::fill(values + begin, values + end, 0.0);
    for (int s = 0; s < 25; ++s) values[slots[s]] += acc[s] * inv_volume;
  }
}

PrecisionModel assemble_precision(const GridSpec& grid, const KappaSpec& kappa,
                                  const AnisotropySpec& spec) {
  PrecisionAssembler assembler(grid, kappa);
  return assembler.model(spec);
}

PrecisionAssembler::PrecisionAssembler(const GridSpec& grid, const KappaSpec& kappa)
    : pattern_(grid), kappa_sq_(kappa.kappa_sq()), q_(pattern_.matrix()) {}

const SparseMatrix& PrecisionAssembler::assemble(const AnisotropySpec& spec) {
  const StencilMatrix a_h = assemble_AH(grid(), sample_H_on_faces(grid(), spec));
  fill_precision(pattern_, a_h, kappa_sq_, q_);
  return q_;
}

PrecisionModel PrecisionAssembler::model(const AnisotropySpec& spec) {
  StencilMatrix a_h = assemble_AH(grid(), sample_H_on_faces(grid(), spec));
  SparseMatrix q = pattern_.matrix();
  fill_precision(pattern_, a_h, kappa_sq_, q);
  return PrecisionModel(grid(), kappa_sq_, std::move(a_h), std::move(q));
}

Eigen::VectorXd apply_A(const PrecisionModel& model, const Eigen::VectorXd& u) {
  const GridSpec& grid = model.grid();
  if (static_cast<std::size_t>(u.size()) != grid.size()) {
    throw std::invalid_argument("apply_A: vector length does not match the grid");
  }
  const double shift = grid.cell_area() * model.kappa_sq();
  const long n = static_cast<long>(grid.size());
  Eigen::VectorXd out(u.size());
#pragma omp parallel for schedule(static)
  for (long a = 0; a < n; ++a) {
    const CellCoord c = cell_of_index(grid, static_cast<std::size_t>(a));
    const auto& row = model.stencil().row(static_cast<std::size_t>(a));
    double acc = shift * u[a];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        acc -= row[stencil_slot(dx, dy)] *
               u[static_cast<Eigen::Index>(linear_index(grid, {c.i + dx, c.j + dy}))];
      }
    }
    out[a] = acc;
  }
  return out;
}

void write_coordinate(std::ostream& out, const SparseMatrix& m) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

}  // namespace nsgrf
