#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "nsgrf/coefficients.hpp"
#include "nsgrf/grid.hpp"
#include "nsgrf/sparse_cholesky.hpp"

namespace nsgrf {

/// H evaluated once per face of the periodic grid (2MN faces).
/// `right[j*M+i]` is H at s_{i+1/2,j}, the face shared by cells (i,j) and (i+1,j);
/// `top[j*M+i]` is H at s_{i,j+1/2}, shared by cells (i,j) and (i,j+1).
struct FaceTensors {
  std::vector<Sym2> right;
  std::vector<Sym2> top;

  std::size_t count() const { return right.size() + top.size(); }
};

FaceTensors sample_H_on_faces(const GridSpec& grid, const AnisotropySpec& spec);

/// Offsets of the 3x3 stencil, slot = (dy+1)*3 + (dx+1).
inline constexpr int stencil_slot(int dx, int dy) { return (dy + 1) * 3 + (dx + 1); }
inline constexpr int kStencilSelf = stencil_slot(0, 0);

/// Nine-point divergence-form operator A_H, one coefficient row per cell.
class StencilMatrix {
 public:
  using Row = std::array<double, 9>;

  StencilMatrix(GridSpec grid, std::vector<Row> rows);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return rows_.size(); }
  const Row& row(std::size_t r) const { return rows_[r]; }
  const std::vector<Row>& rows() const { return rows_; }
  double coefficient(std::size_t r, int dx, int dy) const { return rows_[r][stencil_slot(dx, dy)]; }

  /// Sparse form; coincident neighbours on tiny grids are summed.
  SparseMatrix to_sparse() const;

 private:
  GridSpec grid_;
  std::vector<Row> rows_;
};

StencilMatrix assemble_AH(const GridSpec& grid, const FaceTensors& faces);

/// Fixed compressed structure of Q = Aᵀ D_V⁻¹ A for one grid: the 5x5 neighbourhood
/// of every cell, both triangles stored, coincident offsets merged on small grids.
class PrecisionPattern {
 public:
  explicit PrecisionPattern(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  /// Structure with all values zero.
  const SparseMatrix& matrix() const { return pattern_; }
  /// Position in the value array of Q(cell + (dx,dy), cell) for column `cell`, slot (dy+2)*5+(dx+2).
  const std::array<int, 25>& slots(std::size_t cell) const { return slots_[cell]; }

 private:
  GridSpec grid_;
  SparseMatrix pattern_;
  std::vector<std::array<int, 25>> slots_;
};

/// Assembled operator. Q = Aᵀ D_V⁻¹ A with A = D_V D_κ² − A_H, D_V = V I.
class PrecisionModel {
 public:
  PrecisionModel(GridSpec grid, double kappa_sq, StencilMatrix a_h, SparseMatrix q);

  const GridSpec& grid() const { return grid_; }
  double kappa_sq() const { return kappa_sq_; }
  const StencilMatrix& stencil() const { return a_h_; }
  const SparseMatrix& precision() const { return q_; }

  /// A as a sparse matrix (for tests and export).
  SparseMatrix operator_matrix() const;

 private:
  GridSpec grid_;
  double kappa_sq_;
  StencilMatrix a_h_;
  SparseMatrix q_;
};

/// Fills the values of Q into `q`, which must carry `pattern`'s structure.
void fill_precision(const PrecisionPattern& pattern, const StencilMatrix& a_h, double kappa_sq,
                    SparseMatrix& q);

PrecisionModel assemble_precision(const GridSpec& grid, const KappaSpec& kappa,
                                  const AnisotropySpec& spec);

/// Re-assembles Q for many specs on one grid while reusing the structure.
class PrecisionAssembler {
 public:
  PrecisionAssembler(const GridSpec& grid, const KappaSpec& kappa);

  const GridSpec& grid() const { return pattern_.grid(); }
  const PrecisionPattern& pattern() const { return pattern_; }
  double kappa_sq() const { return kappa_sq_; }

  /// Q for `spec`; the returned reference stays valid until the next call.
  const SparseMatrix& assemble(const AnisotropySpec& spec);
  PrecisionModel model(const AnisotropySpec& spec);

 private:
  PrecisionPattern pattern_;
  double kappa_sq_;
  SparseMatrix q_;
};

/// A u = D_V D_κ² u − A_H u.
Eigen::VectorXd apply_A(const PrecisionModel& model, const Eigen::VectorXd& u);

/// One "row col value" line per stored entry, 0-based, 17 significant digits.
void write_coordinate(std::ostream& out, const SparseMatrix& m);

namespace reference {

// Serial, direct implementations kept as test oracles and benchmark baselines.

SparseMatrix assemble_AH_serial(const GridSpec& grid, const AnisotropySpec& spec);

/// (V κ² I − A_H)ᵀ (V κ² I − A_H) / V via a sparse matrix product.
SparseMatrix precision_serial(const GridSpec& grid, double kappa_sq, const AnisotropySpec& spec);

/// diag(Q⁻¹) from one solve per unit vector.
Eigen::VectorXd inverse_diagonal_by_columns(const SupernodalCholesky& factor);

}  // namespace reference

}  // namespace nsgrf
