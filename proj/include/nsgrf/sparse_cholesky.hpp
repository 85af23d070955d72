#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nsgrf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Raised when a Cholesky pivot is not positive. `pivot()` is the row/column
/// index of the failing pivot in the caller's (unpermuted) numbering.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(std::size_t pivot, const std::string& what);
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Supernodal multifrontal Cholesky factorization P Q Pᵀ = L Lᵀ of a sparse
/// symmetric positive definite matrix, with selected inversion.
///
/// `analyze` fixes the structure (AMD ordering followed by an elimination-tree
/// postorder); `factorize` may then be called repeatedly with any matrix
/// sharing that structure. Both triangles of Q must be stored; entries with
/// permuted row < column are ignored.
class SupernodalCholesky {
 public:
  SupernodalCholesky() = default;
  explicit SupernodalCholesky(const SparseMatrix& q) { compute(q); }

  void analyze(const SparseMatrix& q);
  /// Throws NotPositiveDefinite on breakdown; the factor is then invalid.
  void factorize(const SparseMatrix& q);
  void compute(const SparseMatrix& q) {
    analyze(q);
    factorize(q);
  }

  bool analyzed() const { return n_ > 0 || analyzed_empty_; }
  bool factorized() const { return factorized_; }
  std::size_t rows() const { return n_; }
  std::size_t supernodes() const { return sn_start_.empty() ? 0 : sn_start_.size() - 1; }
  /// Stored entries of L (dense supernode blocks, lower trapezoids counted in full).
  std::size_t factor_storage() const { return values_.size(); }

  double log_determinant() const;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  /// x = Pᵀ L⁻ᵀ z. For z ~ N(0, I), x ~ N(0, Q⁻¹).
  Eigen::VectorXd solve_lt(const Eigen::VectorXd& z) const;

  /// x = L⁻¹ P b, so that bᵀ Q⁻¹ b = ‖x‖².
  Eigen::VectorXd solve_l(const Eigen::VectorXd& b) const;

  /// diag(Q⁻¹) by supernodal Takahashi recursion on the factor pattern.
  Eigen::VectorXd inverse_diagonal() const;

 private:
  struct Front;

  void forward_in_place(Eigen::VectorXd& y) const;
  void backward_in_place(Eigen::VectorXd& x) const;
  std::size_t block_offset(std::size_t s) const { return block_offset_[s]; }

  std::size_t n_ = 0;
  bool analyzed_empty_ = false;
  bool factorized_ = false;
  std::size_t nnz_pattern_ = 0;
  std::vector<int> outer_pattern_;
  std::vector<int> inner_pattern_;

  std::vector<int> perm_;      // new -> old
  std::vector<int> inv_perm_;  // old -> new

  std::vector<int> sn_start_;                // columns [sn_start_[s], sn_start_[s+1])
  std::vector<std::vector<int>> sn_rows_;    // sorted row structure, starts with own columns
  std::vector<int> sn_parent_;               // -1 for roots
  std::vector<std::vector<int>> sn_children_;
  std::vector<std::vector<int>> ext_map_;    // child update rows -> positions in parent rows
  std::vector<int> col_to_sn_;
  std::vector<std::size_t> block_offset_;

  // scatter of Q's values into the fronts: (value index, local row, local col) per supernode
  std::vector<std::size_t> assemble_start_;
  std::vector<int> assemble_src_;
  std::vector<int> assemble_pos_;

  std::vector<double> values_;
};

}  // namespace nsgrf
