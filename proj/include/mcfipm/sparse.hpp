#pragma once

// Compressed sparse-row matrices and the handful of kernels the solver stack
// needs: assembly from triplets, products, transposition and MatrixMarket output.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcfipm {

using Index = std::int32_t;
using Vector = std::vector<double>;

struct Triplet {
  Index row;
  Index col;
  double value;
};

class SparseMatrix {
public:
  SparseMatrix() = default;

  /// Takes ownership of raw CSR arrays. Column indices must be strictly
  /// increasing within each row.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
               std::vector<Index> indices, Vector values)
      : rows_(rows), cols_(cols), offsets_(std::move(offsets)), indices_(std::move(indices)),
        values_(std::move(values)) {
    if (offsets_.size() != rows_ + 1 || indices_.size() != values_.size() ||
        offsets_.back() != indices_.size())
      throw std::invalid_argument("SparseMatrix: inconsistent CSR arrays");
  }

  /// Sums duplicate entries. Entries that end up exactly zero are dropped
  /// unless keep_zeros is set (used when a fixed sparsity pattern is wanted).
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets, bool keep_zeros = false) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<Index> indices;
    Vector values;
    indices.reserve(triplets.size());
    values.reserve(triplets.size());
    std::size_t k = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      while (k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == r) {
        const Index c = triplets[k].col;
        if (c < 0 || static_cast<std::size_t>(c) >= cols)
          throw std::out_of_range("SparseMatrix: column index out of range");
        double sum = 0.0;
        while (k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == r &&
               triplets[k].col == c)
          sum += triplets[k++].value;
        if (sum != 0.0 || keep_zeros) {
          indices.push_back(c);
          values.push_back(sum);
        }
      }
      offsets[r + 1] = indices.size();
    }
    if (k != triplets.size()) throw std::out_of_range("SparseMatrix: row index out of range");
    return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<std::size_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<Index> indices(n);
    std::iota(indices.begin(), indices.end(), Index{0});
    return SparseMatrix(n, n, std::move(offsets), std::move(indices), Vector(n, 1.0));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const Index> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::span<const Index> row_indices(std::size_t r) const noexcept {
    return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const noexcept {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<double> row_values(std::size_t r) noexcept {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  /// Entry lookup by binary search; zero when structurally absent.
  double at(std::size_t r, std::size_t c) const {
    auto idx = row_indices(r);
    auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(c));
    if (it == idx.end() || *it != static_cast<Index>(c)) return 0.0;
    return values_[offsets_[r] + static_cast<std::size_t>(it - idx.begin())];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == cols_ && y.size() == rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        sum += values_[k] * x[static_cast<std::size_t>(indices_[k])];
      y[r] = sum;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
  }

  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == rows_ && y.size() == cols_);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        y[static_cast<std::size_t>(indices_[k])] += values_[k] * x[r];
  }

  Vector diagonal() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = at(r, r);
    return d;
  }

  SparseMatrix transpose() const {
    std::vector<std::size_t> offsets(cols_ + 1, 0);
    for (Index c : indices_) ++offsets[static_cast<std::size_t>(c) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<Index> indices(nnz());
    Vector values(nnz());
    std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
        const std::size_t pos = next[static_cast<std::size_t>(indices_[k])]++;
        indices[pos] = static_cast<Index>(r);
        values[pos] = values_[k];
      }
    return SparseMatrix(cols_, rows_, std::move(offsets), std::move(indices), std::move(values));
  }

  /// Largest absolute row sum.
  double norm_inf() const {
    double best = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (double v : row_values(r)) s += std::abs(v);
      best = std::max(best, s);
    }
    return best;
  }

  bool is_symmetric(double rel_tol = 0.0) const {
    if (rows_ != cols_) return false;
    const double scale = rel_tol * std::max(norm_inf(), 1e-300);
    for (std::size_t r = 0; r < rows_; ++r) {
      auto idx = row_indices(r);
      auto val = row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (std::abs(val[k] - at(static_cast<std::size_t>(idx[k]), r)) > scale) return false;
    }
    return true;
  }

  std::vector<Vector> to_dense() const {
    std::vector<Vector> dense(rows_, Vector(cols_, 0.0));
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        dense[r][static_cast<std::size_t>(indices_[k])] = values_[k];
    return dense;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Index> indices_;
  Vector values_;
};

/// C = A B with a dense accumulator per row (Gustavson).
inline SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0);
  std::vector<Index> indices;
  Vector values;
  Vector accum(b.cols(), 0.0);
  std::vector<std::size_t> marker(b.cols(), static_cast<std::size_t>(-1));
  std::vector<Index> row_cols;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    row_cols.clear();
    auto ai = a.row_indices(r);
    auto av = a.row_values(r);
    for (std::size_t ka = 0; ka < ai.size(); ++ka) {
      const auto k = static_cast<std::size_t>(ai[ka]);
      auto bi = b.row_indices(k);
      auto bv = b.row_values(k);
      for (std::size_t kb = 0; kb < bi.size(); ++kb) {
        const auto c = static_cast<std::size_t>(bi[kb]);
        if (marker[c] != r) {
          marker[c] = r;
          accum[c] = 0.0;
          row_cols.push_back(bi[kb]);
        }
        accum[c] += av[ka] * bv[kb];
      }
    }
    std::sort(row_cols.begin(), row_cols.end());
    for (Index c : row_cols) {
      indices.push_back(c);
      values.push_back(accum[static_cast<std::size_t>(c)]);
    }
    offsets[r + 1] = indices.size();
  }
  return SparseMatrix(a.rows(), b.cols(), std::move(offsets), std::move(indices),
                      std::move(values));
}

/// Galerkin product P^T A P.
inline SparseMatrix galerkin_product(const SparseMatrix& a, const SparseMatrix& p) {
  return multiply(p.transpose(), multiply(a, p));
}

/// MatrixMarket coordinate format, 1-based, general real.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto idx = a.row_indices(r);
    auto val = a.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k)
      out << r + 1 << ' ' << idx[k] + 1 << ' ' << val[k] << '\n';
  }
}

// Small dense-vector helpers shared by the solvers.
namespace blas {

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// y += alpha x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace blas

}  // namespace mcfipm
