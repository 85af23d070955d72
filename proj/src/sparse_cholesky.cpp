#include "nsgrf/sparse_cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>

namespace nsgrf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using ConstBlockMap = Eigen::Map<const MatrixXd>;
using BlockMap = Eigen::Map<MatrixXd>;

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot, const std::string& what)
    : std::runtime_error(what), pivot_(pivot) {}

void SupernodalCholesky::analyze(const SparseMatrix& q_in) {
  if (q_in.rows() != q_in.cols()) throw std::invalid_argument("cholesky: matrix is not square");
  SparseMatrix q = q_in;
  q.makeCompressed();
  factorized_ = false;
  n_ = static_cast<std::size_t>(q.rows());
  analyzed_empty_ = n_ == 0;
  const int n = static_cast<int>(n_);
  nnz_pattern_ = static_cast<std::size_t>(q.nonZeros());
  outer_pattern_.assign(q.outerIndexPtr(), q.outerIndexPtr() + n + 1);
  inner_pattern_.assign(q.innerIndexPtr(), q.innerIndexPtr() + q.nonZeros());

  // fill-reducing ordering; amd yields new -> old
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd_perm;
  Eigen::AMDOrdering<int> amd;
  amd(q, amd_perm);
  std::vector<int> amd_new_to_old(amd_perm.indices().data(), amd_perm.indices().data() + n);
  std::vector<int> amd_old_to_new(n);
  for (int k = 0; k < n; ++k) amd_old_to_new[amd_new_to_old[k]] = k;

  auto permuted_adjacency = [&](const std::vector<int>& old_to_new) {
    std::vector<std::vector<int>> adj(n);
    for (int c = 0; c < n; ++c) {
      for (int p = outer_pattern_[c]; p < outer_pattern_[c + 1]; ++p) {
        const int r = inner_pattern_[p];
        if (r == c) continue;
        const int nr = old_to_new[r], nc = old_to_new[c];
        adj[nc].push_back(nr);
        adj[nr].push_back(nc);
      }
    }
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
  };

  auto elimination_tree = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<int> parent(n, -1), ancestor(n, -1);
    for (int k = 0; k < n; ++k) {
      for (int i : adj[k]) {
        if (i >= k) break;
        int r = i;
        while (ancestor[r] != -1 && ancestor[r] != k) {
          const int next = ancestor[r];
          ancestor[r] = k;
          r = next;
        }
        if (ancestor[r] == -1) {
          ancestor[r] = k;
          parent[r] = k;
        }
      }
    }
    return parent;
  };

  auto adj = permuted_adjacency(amd_old_to_new);
  std::vector<int> parent = elimination_tree(adj);

  // postorder the elimination tree so that supernodes are contiguous
  std::vector<std::vector<int>> kids(n);
  std::vector<int> roots;
  for (int j = 0; j < n; ++j) {
    if (parent[j] == -1) {
      roots.push_back(j);
    } else {
      kids[parent[j]].push_back(j);
    }
  }
  std::vector<int> post(n);
  {
    int counter = 0;
    std::vector<std::pair<int, std::size_t>> stack;
    for (int root : roots) {
      stack.emplace_back(root, 0);
      while (!stack.empty()) {
        auto& [node, next_kid] = stack.back();
        if (next_kid < kids[node].size()) {
          const int child = kids[node][next_kid++];
          stack.emplace_back(child, 0);
        } else {
          post[node] = counter++;
          stack.pop_back();
        }
      }
    }
  }
  perm_.assign(n, 0);
  inv_perm_.assign(n, 0);
  for (int old = 0; old < n; ++old) {
    const int nw = post[amd_old_to_new[old]];
    inv_perm_[old] = nw;
    perm_[nw] = old;
  }
  std::vector<int> parent_post(n, -1);
  for (int j = 0; j < n; ++j) {
    parent_post[post[j]] = parent[j] == -1 ? -1 : post[parent[j]];
  }
  parent.swap(parent_post);
  adj = permuted_adjacency(inv_perm_);

  std::vector<std::vector<int>> col_kids(n);
  for (int j = 0; j < n; ++j) {
    if (parent[j] != -1) col_kids[parent[j]].push_back(j);
  }

  // column structures by merging children, detecting fundamental supernodes on the way
  std::vector<std::vector<int>> col_struct(n);
  std::vector<int> mark(n, -1);
  std::vector<std::size_t> count(n, 0);
  sn_start_.clear();
  sn_rows_.clear();
  for (int j = 0; j < n; ++j) {
    std::vector<int> rows{j};
    mark[j] = j;
    for (int i : adj[j]) {
      if (i > j && mark[i] != j) {
        mark[i] = j;
        rows.push_back(i);
      }
    }
    for (int c : col_kids[j]) {
      for (int i : col_struct[c]) {
        if (i > j && mark[i] != j) {
          mark[i] = j;
          rows.push_back(i);
        }
      }
      std::vector<int>().swap(col_struct[c]);
    }
    std::sort(rows.begin(), rows.end());
    count[j] = rows.size();
    const bool extends = j > 0 && parent[j - 1] == j && col_kids[j].size() == 1 &&
                         count[j - 1] == count[j] + 1;
    if (!extends) {
      sn_start_.push_back(j);
      sn_rows_.push_back(rows);
    }
    if (parent[j] != -1) col_struct[j] = std::move(rows);
  }
  sn_start_.push_back(n);
  const std::size_t ns = sn_rows_.size();

  col_to_sn_.assign(n, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    for (int j = sn_start_[s]; j < sn_start_[s + 1]; ++j) col_to_sn_[j] = static_cast<int>(s);
  }
  sn_parent_.assign(ns, -1);
  sn_children_.assign(ns, {});
  ext_map_.assign(ns, {});
  block_offset_.assign(ns + 1, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    const int last = sn_start_[s + 1] - 1;
    const std::size_t w = static_cast<std::size_t>(sn_start_[s + 1] - sn_start_[s]);
    block_offset_[s + 1] = block_offset_[s] + sn_rows_[s].size() * w;
    if (parent[last] != -1) {
      const int p = col_to_sn_[parent[last]];
      sn_parent_[s] = p;
      sn_children_[p].push_back(static_cast<int>(s));
      const auto& mine = sn_rows_[s];
      const auto& theirs = sn_rows_[p];
      auto& map = ext_map_[s];
      map.reserve(mine.size() - w);
      std::size_t t = 0;
      for (std::size_t k = w; k < mine.size(); ++k) {
        while (theirs[t] != mine[k]) ++t;
        map.push_back(static_cast<int>(t));
      }
    }
  }

  // scatter map for Q's values into the fronts
  std::vector<std::size_t> per_sn(ns + 1, 0);
  for (int c = 0; c < n; ++c) {
    for (int p = outer_pattern_[c]; p < outer_pattern_[c + 1]; ++p) {
      const int nr = inv_perm_[inner_pattern_[p]], nc = inv_perm_[c];
      if (nr >= nc) ++per_sn[col_to_sn_[nc] + 1];
    }
  }
  std::partial_sum(per_sn.begin(), per_sn.end(), per_sn.begin());
  assemble_start_ = per_sn;
  assemble_src_.assign(per_sn.back(), 0);
  assemble_pos_.assign(per_sn.back(), 0);
  std::vector<std::size_t> fill = per_sn;
  for (int c = 0; c < n; ++c) {
    for (int p = outer_pattern_[c]; p < outer_pattern_[c + 1]; ++p) {
      const int nr = inv_perm_[inner_pattern_[p]], nc = inv_perm_[c];
      if (nr < nc) continue;
      const int s = col_to_sn_[nc];
      const auto& rows = sn_rows_[s];
      const int lr = static_cast<int>(std::lower_bound(rows.begin(), rows.end(), nr) - rows.begin());
      const int lc = nc - sn_start_[s];
      const std::size_t slot = fill[s]++;
      assemble_src_[slot] = p;
      assemble_pos_[slot] = lc * static_cast<int>(rows.size()) + lr;
    }
  }
  values_.assign(block_offset_[ns], 0.0);
}

void SupernodalCholesky::factorize(const SparseMatrix& q_in) {
  if (!analyzed()) throw std::logic_error("cholesky: analyze() must precede factorize()");
  if (static_cast<std::size_t>(q_in.rows()) != n_ || static_cast<std::size_t>(q_in.nonZeros()) != nnz_pattern_) {
    throw std::invalid_argument("cholesky: matrix structure differs from the analyzed one");
  }
  SparseMatrix compressed;
  const SparseMatrix* qp = &q_in;
  if (!q_in.isCompressed()) {
    compressed = q_in;
    compressed.makeCompressed();
    qp = &compressed;
  }
  const double* qv = qp->valuePtr();
  factorized_ = false;
  const std::size_t ns = supernodes();
  std::vector<MatrixXd> updates(ns);

  for (std::size_t s = 0; s < ns; ++s) {
    const Index m = static_cast<Index>(sn_rows_[s].size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    const Index r = m - w;
    MatrixXd front = MatrixXd::Zero(m, m);
    double* fd = front.data();
    for (std::size_t e = assemble_start_[s]; e < assemble_start_[s + 1]; ++e) {
      fd[assemble_pos_[e]] += qv[assemble_src_[e]];
    }
    for (int c : sn_children_[s]) {
      const MatrixXd& u = updates[c];
      const auto& map = ext_map_[c];
      const Index ru = u.rows();
      for (Index jj = 0; jj < ru; ++jj) {
        const Index tc = map[jj];
        double* dst = fd + tc * m;
        const double* src = u.data() + jj * ru;
        for (Index ii = jj; ii < ru; ++ii) dst[map[ii]] += src[ii];
      }
      MatrixXd().swap(updates[c]);
    }

    auto f11 = front.topLeftCorner(w, w);
    Index bad = Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(f11);
    if (bad < 0) {
      // NaN pivots slip through the `<= 0` test inside Eigen
      for (Index k = 0; k < w && bad < 0; ++k)
        if (!std::isfinite(f11(k, k))) bad = k;
    }
    if (bad >= 0) {
      const Index k = bad;  // blocked() reports the exact failing column
      const std::size_t pivot = static_cast<std::size_t>(perm_[sn_start_[s] + k]);
      throw NotPositiveDefinite(pivot, "matrix is not positive definite (pivot at index " +
                                           std::to_string(pivot) + ")");
    }
    if (r > 0) {
      auto f21 = front.bottomLeftCorner(r, w);
      f11.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(f21);
      updates[s] = front.bottomRightCorner(r, r);
      updates[s].selfadjointView<Eigen::Lower>().rankUpdate(f21, -1.0);
    }
    BlockMap(values_.data() + block_offset_[s], m, w) = front.leftCols(w);
  }
  factorized_ = true;
}

double SupernodalCholesky::log_determinant() const {
  if (!factorized_) throw std::logic_error("cholesky: not factorized");
  double acc = 0.0;
  for (std::size_t s = 0; s < supernodes(); ++s) {
    const Index m = static_cast<Index>(sn_rows_[s].size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    ConstBlockMap blk(values_.data() + block_offset_[s], m, w);
    for (Index k = 0; k < w; ++k) acc += std::log(blk(k, k));
  }
  return 2.0 * acc;
}

void SupernodalCholesky::forward_in_place(Eigen::VectorXd& y) const {
  Eigen::VectorXd tmp;
  for (std::size_t s = 0; s < supernodes(); ++s) {
    const Index m = static_cast<Index>(sn_rows_[s].size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    ConstBlockMap blk(values_.data() + block_offset_[s], m, w);
    auto yj = y.segment(sn_start_[s], w);
    blk.topRows(w).triangularView<Eigen::Lower>().solveInPlace(yj);
    if (m > w) {
      tmp.noalias() = blk.bottomRows(m - w) * yj;
      for (Index k = 0; k < m - w; ++k) y[sn_rows_[s][w + k]] -= tmp[k];
    }
  }
}

void SupernodalCholesky::backward_in_place(Eigen::VectorXd& x) const {
  Eigen::VectorXd xr;
  for (std::size_t s = supernodes(); s-- > 0;) {
    const Index m = static_cast<Index>(sn_rows_[s].size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    ConstBlockMap blk(values_.data() + block_offset_[s], m, w);
    auto xj = x.segment(sn_start_[s], w);
    if (m > w) {
      xr.resize(m - w);
      for (Index k = 0; k < m - w; ++k) xr[k] = x[sn_rows_[s][w + k]];
      xj.noalias() -= blk.bottomRows(m - w).transpose() * xr;
    }
    blk.topRows(w).transpose().triangularView<Eigen::Upper>().solveInPlace(xj);
  }
}

Eigen::VectorXd SupernodalCholesky::solve(const Eigen::VectorXd& b) const {
  if (!factorized_) throw std::logic_error("cholesky: not factorized");
  if (static_cast<std::size_t>(b.size()) != n_) throw std::invalid_argument("cholesky: size mismatch");
  Eigen::VectorXd y(b.size());
  for (std::size_t k = 0; k < n_; ++k) y[k] = b[perm_[k]];
  forward_in_place(y);
  backward_in_place(y);
  Eigen::VectorXd x(b.size());
  for (std::size_t k = 0; k < n_; ++k) x[perm_[k]] = y[k];
  return x;
}

Eigen::VectorXd SupernodalCholesky::solve_lt(const Eigen::VectorXd& z) const {
  if (!factorized_) throw std::logic_error("cholesky: not factorized");
  if (static_cast<std::size_t>(z.size()) != n_) throw std::invalid_argument("cholesky: size mismatch");
  Eigen::VectorXd y = z;
  backward_in_place(y);
  Eigen::VectorXd x(z.size());
  for (std::size_t k = 0; k < n_; ++k) x[perm_[k]] = y[k];
  return x;
}

Eigen::VectorXd SupernodalCholesky::solve_l(const Eigen::VectorXd& b) const {
  if (!factorized_) throw std::logic_error("cholesky: not factorized");
  if (static_cast<std::size_t>(b.size()) != n_) throw std::invalid_argument("cholesky: size mismatch");
  Eigen::VectorXd y(b.size());
  for (std::size_t k = 0; k < n_; ++k) y[k] = b[perm_[k]];
  forward_in_place(y);
  return y;
}

Eigen::VectorXd SupernodalCholesky::inverse_diagonal() const {
  if (!factorized_) throw std::logic_error("cholesky: not factorized");
  std::vector<double> sigma(values_.size(), 0.0);
  std::vector<int> pos(n_, 0);
  MatrixXd gathered, w_mat, z_rj, l_inv, z_jj;
  for (std::size_t s = supernodes(); s-- > 0;) {
    const auto& rows = sn_rows_[s];
    const Index m = static_cast<Index>(rows.size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    const Index r = m - w;
    ConstBlockMap blk(values_.data() + block_offset_[s], m, w);
    const auto l11 = blk.topRows(w);

    l_inv.setIdentity(w, w);
    l11.triangularView<Eigen::Lower>().solveInPlace(l_inv);
    z_jj.noalias() = l_inv.transpose() * l_inv;

    BlockMap out(sigma.data() + block_offset_[s], m, w);
    if (r > 0) {
      // W = L21 L11⁻¹
      w_mat = blk.bottomRows(r);
      l11.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(w_mat);

      // Σ_RR from the already computed ancestor blocks (lower triangle only)
      gathered.setZero(r, r);
      Index b = 0;
      while (b < r) {
        const int t = col_to_sn_[rows[w + b]];
        const auto& trows = sn_rows_[t];
        const Index mt = static_cast<Index>(trows.size());
        for (Index k = 0; k < mt; ++k) pos[trows[k]] = static_cast<int>(k);
        const double* zt = sigma.data() + block_offset_[t];
        while (b < r && col_to_sn_[rows[w + b]] == t) {
          const Index lc = rows[w + b] - sn_start_[t];
          const double* col = zt + lc * mt;
          for (Index a = b; a < r; ++a) gathered(a, b) = col[pos[rows[w + a]]];
          ++b;
        }
      }
      z_rj.noalias() = -(gathered.selfadjointView<Eigen::Lower>() * w_mat);
      z_jj.noalias() -= w_mat.transpose() * z_rj;
      out.bottomRows(r) = z_rj;
    }
    out.topRows(w) = z_jj;
  }
  Eigen::VectorXd diag(static_cast<Index>(n_));
  for (std::size_t s = 0; s < supernodes(); ++s) {
    const Index m = static_cast<Index>(sn_rows_[s].size());
    const Index w = sn_start_[s + 1] - sn_start_[s];
    ConstBlockMap blk(sigma.data() + block_offset_[s], m, w);
    for (Index k = 0; k < w; ++k) diag[perm_[sn_start_[s] + k]] = blk(k, k);
  }
  return diag;
}

}  // namespace nsgrf
