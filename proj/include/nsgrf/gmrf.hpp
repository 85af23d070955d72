#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

#include "nsgrf/grid.hpp"
#include "nsgrf/sparse_cholesky.hpp"

namespace nsgrf {

/// Cholesky factor of a precision matrix together with the matrix itself.
/// Refactorizing a matrix with the same structure reuses the symbolic analysis.
class PrecisionFactor {
 public:
  PrecisionFactor() = default;
  explicit PrecisionFactor(const SparseMatrix& q) { factorize(q); }

  /// Throws NotPositiveDefinite; the previous factor is then unusable.
  void factorize(const SparseMatrix& q);

  std::size_t size() const { return chol_.rows(); }
  const SparseMatrix& matrix() const { return q_; }
  const SupernodalCholesky& cholesky() const { return chol_; }

  double log_determinant() const { return chol_.log_determinant(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return chol_.solve(b); }
  Eigen::VectorXd solve_lt(const Eigen::VectorXd& z) const { return chol_.solve_lt(z); }

 private:
  SparseMatrix q_;
  SupernodalCholesky chol_;
};

PrecisionFactor factorize(const SparseMatrix& q);

/// FNV-1a over the dimension, structure and values of Q.
std::uint64_t model_hash(const SparseMatrix& q);

struct Realization {
  Eigen::VectorXd u;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
};

/// u = Pᵀ L⁻ᵀ z with z ~ N(0, I) drawn from a seeded mt19937_64.
Realization sample(const PrecisionFactor& factor, std::uint64_t seed);

/// Standard normal vector of length n from a seeded mt19937_64.
Eigen::VectorXd standard_normal(std::size_t n, std::uint64_t seed);

/// diag(Q⁻¹), exact (selected inversion).
Eigen::VectorXd marginal_variances(const PrecisionFactor& factor);

/// Corr(u_ref, u_j) for all cells j. Pass precomputed variances to avoid recomputing them.
Eigen::VectorXd correlation_field(const PrecisionFactor& factor, const GridSpec& grid,
                                  CellCoord ref, const Eigen::VectorXd* variances = nullptr);

/// −(n/2) log 2π + ½ log|Q| − ½ uᵀQu.
double gaussian_log_density(const PrecisionFactor& factor, const Eigen::VectorXd& u);

/// Field as M columns by N rows, row j on line j, 17 significant digits.
void write_field_csv(std::ostream& out, const GridSpec& grid, const Eigen::VectorXd& field);

/// Inverse of write_field_csv; throws std::runtime_error on shape or parse errors.
Eigen::VectorXd read_field_csv(std::istream& in, const GridSpec& grid);

}  // namespace nsgrf
