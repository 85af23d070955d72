#include "nsgrf/gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nsgrf {

namespace {

bool same_structure(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  const auto n = static_cast<std::size_t>(a.cols());
  const auto nnz = static_cast<std::size_t>(a.nonZeros());
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + n + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + nnz, b.innerIndexPtr());
}

}  // namespace

void PrecisionFactor::factorize(const SparseMatrix& q) {
  if (q.rows() != q.cols()) throw std::invalid_argument("precision matrix must be square");
  SparseMatrix compressed = q;
  compressed.makeCompressed();
  const bool reuse = chol_.analyzed() && same_structure(q_, compressed);
  q_ = std::move(compressed);
  if (!reuse) chol_.analyze(q_);
  chol_.factorize(q_);
}

PrecisionFactor factorize(const SparseMatrix& q) { return PrecisionFactor(q); }

std::uint64_t model_hash(const SparseMatrix& q) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < bytes; ++k) {
      h ^= p[k];
      h *= 1099511628211ull;
    }
  };
  const std::int64_t dims[2] = {q.rows(), q.nonZeros()};
  mix(dims, sizeof dims);
  for (int c = 0; c < q.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(q, c); it; ++it) {
      const int rc[2] = {static_cast<int>(it.row()), c};
      const double v = it.value();
      mix(rc, sizeof rc);
      mix(&v, sizeof v);
    }
  }
  return h;
}

Eigen::VectorXd standard_normal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (auto& x : z) x = normal(rng);
  return z;
}

Realization sample(const PrecisionFactor& factor, std::uint64_t seed) {
  Realization r;
  r.u = factor.solve_lt(standard_normal(factor.size(), seed));
  r.seed = seed;
  r.model_hash = model_hash(factor.matrix());
  return r;
}

Eigen::VectorXd marginal_variances(const PrecisionFactor& factor) {
  return factor.cholesky().inverse_diagonal();
}

Eigen::VectorXd correlation_field(const PrecisionFactor& factor, const GridSpec& grid,
                                  CellCoord ref, const Eigen::VectorXd* variances) {
  if (factor.size() != grid.size()) throw std::invalid_argument("correlation_field: grid mismatch");
  const auto k = static_cast<Eigen::Index>(linear_index(grid, ref));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  e[k] = 1.0;
  const Eigen::VectorXd c = factor.solve(e);
  Eigen::VectorXd own;
  if (variances == nullptr) {
    own = marginal_variances(factor);
    variances = &own;
  }
  Eigen::VectorXd corr = c.array() / (c[k] * variances->array()).sqrt();
  corr[k] = 1.0;
  return corr;
}

double gaussian_log_density(const PrecisionFactor& factor, const Eigen::VectorXd& u) {
  if (static_cast<std::size_t>(u.size()) != factor.size()) {
    throw std::invalid_argument("gaussian_log_density: length mismatch");
  }
  const double n = static_cast<double>(u.size());
  const double quad = u.dot(factor.matrix().selfadjointView<Eigen::Lower>() * u);
  return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * factor.log_determinant() - 0.5 * quad;
}

void write_field_csv(std::ostream& out, const GridSpec& grid, const Eigen::VectorXd& field) {
  if (static_cast<std::size_t>(field.size()) != grid.size()) {
    throw std::invalid_argument("write_field_csv: length mismatch");
  }
  const auto old_precision = out.precision(17);
  const auto m = static_cast<Eigen::Index>(grid.cells_x());
  const auto n = static_cast<Eigen::Index>(grid.cells_y());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i) out << ',';
      out << field[j * m + i];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

Eigen::VectorXd read_field_csv(std::istream& in, const GridSpec& grid) {
  const auto m = grid.cells_x();
  const auto n = grid.cells_y();
  Eigen::VectorXd field(static_cast<Eigen::Index>(grid.size()));
  std::string line;
  std::size_t j = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (j == n) throw std::runtime_error("field csv: more than " + std::to_string(n) + " rows");
    std::istringstream row(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(row, cell, ',')) {
      if (i == m) throw std::runtime_error("field csv: row " + std::to_string(j) + " too long");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) {
        throw std::runtime_error("field csv: bad number at row " + std::to_string(j) + ", column " +
                                 std::to_string(i));
      }
      field[static_cast<Eigen::Index>(j * m + i)] = v;
      ++i;
    }
    if (i != m) throw std::runtime_error("field csv: row " + std::to_string(j) + " too short");
    ++j;
  }
  if (j != n) throw std::runtime_error("field csv: expected " + std::to_string(n) + " rows");
  return field;
}

}  // namespace nsgrf
