#pragma once

// Smoothed-aggregation algebraic multigrid, used as a preconditioner for the
// pinned Schur-complement Laplacian.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"

namespace mcfipm {

struct AmgOptions {
  double theta = 0.08;                ///< strength-of-connection threshold
  std::size_t max_coarse = 64;        ///< stop coarsening at or below this size
  std::size_t max_levels = 25;
  std::size_t max_dense = 1500;       ///< largest coarsest level factored densely
  std::size_t coarse_sweeps = 20;     ///< Jacobi sweeps if the coarsest level is too large to factor
  double stall_ratio = 0.9;           ///< give up when coarse/fine size exceeds this
  double truncation = 0.1;            ///< drop prolongation entries below this fraction of the row maximum
  std::size_t max_row_entries = 4;    ///< keep at most this many prolongation entries per row (0 = no cap)
};

/// Dense Cholesky factor L (row-major, lower triangle) of a small SPD matrix.
/// Pivots that vanish relative to their own diagonal entry are dropped, which turns
/// the solve into a pseudo-inverse on numerically singular directions.
class DenseCholesky {
public:
  DenseCholesky() = default;

  explicit DenseCholesky(const SparseMatrix& a) : n_(a.rows()), factor_(n_ * n_, 0.0), skip_(n_, false) {
    for (std::size_t r = 0; r < n_; ++r) {
      auto idx = a.row_indices(r);
      auto val = a.row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (static_cast<std::size_t>(idx[k]) <= r) factor_[r * n_ + static_cast<std::size_t>(idx[k])] = val[k];
    }
    for (std::size_t j = 0; j < n_; ++j) {
      // relative to the row's own diagonal: metric weights span many decades
      const double drop = 1e-14 * std::abs(factor_[j * n_ + j]);
      double d = factor_[j * n_ + j];
      for (std::size_t k = 0; k < j; ++k) d -= factor_[j * n_ + k] * factor_[j * n_ + k];
      if (d <= drop) {
        skip_[j] = true;
        for (std::size_t i = j; i < n_; ++i) factor_[i * n_ + j] = 0.0;
        continue;
      }
      const double ljj = std::sqrt(d);
      factor_[j * n_ + j] = ljj;
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = factor_[i * n_ + j];
        for (std::size_t k = 0; k < j; ++k) s -= factor_[i * n_ + k] * factor_[j * n_ + k];
        factor_[i * n_ + j] = s / ljj;
      }
    }
  }

  void solve(std::span<const double> b, std::span<double> x) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (skip_[i]) {
        x[i] = 0.0;
        continue;
      }
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= factor_[i * n_ + k] * x[k];
      x[i] = s / factor_[i * n_ + i];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      if (skip_[ii]) continue;
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= factor_[k * n_ + ii] * x[k];
      x[ii] = s / factor_[ii * n_ + ii];
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dropped_pivots() const { return static_cast<std::size_t>(std::count(skip_.begin(), skip_.end(), true)); }

private:
  std::size_t n_ = 0;
  std::vector<double> factor_;
  std::vector<bool> skip_;
};

struct AmgLevel {
  SparseMatrix op;
  SparseMatrix prolongation;   ///< maps the next coarser level onto this one; empty on the coarsest
  SparseMatrix restriction;    ///< prolongation transposed
  Vector smoother;             ///< omega / diag
  double omega = 2.0 / 3.0;
};

class AmgHierarchy {
public:
  std::vector<AmgLevel> levels;
  DenseCholesky coarse_factor;
  bool coarse_is_direct = false;
  std::size_t coarse_sweeps = 0;

  std::size_t num_levels() const noexcept { return levels.size(); }
  std::size_t size() const noexcept { return levels.empty() ? 0 : levels.front().op.rows(); }

  /// Sum of operator nonzeros over all levels relative to the finest.
  double operator_complexity() const {
    if (levels.empty() || levels.front().op.nnz() == 0) return 1.0;
    double total = 0.0;
    for (const auto& l : levels) total += static_cast<double>(l.op.nnz());
    return total / static_cast<double>(levels.front().op.nnz());
  }

  std::vector<std::size_t> level_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& l : levels) s.push_back(l.op.rows());
    return s;
  }
};

namespace amg_detail {

/// Upper bound on the spectral radius of D^{-1} A (Gershgorin).
inline double gershgorin_bound(const SparseMatrix& a, std::span<const double> diag) {
  double bound = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row_values(r)) s += std::abs(v);
    bound = std::max(bound, s / diag[r]);
  }
  return bound;
}

inline double smoothing_weight(const SparseMatrix& a, std::span<const double> diag) {
  return std::min(2.0 / 3.0, (4.0 / 3.0) / std::max(gershgorin_bound(a, diag), 1.0));
}

constexpr Index unaggregated = -1;

/// Greedy aggregation on the strength graph. Rows without any off-diagonal
/// coupling are left out (zero row in the tentative prolongation).
inline std::vector<Index> aggregate(const SparseMatrix& a, std::span<const double> diag, double theta,
                                    Index& count) {
  const std::size_t n = a.rows();
  // strong neighbours as CSR
  std::vector<std::size_t> s_off(n + 1, 0);
  std::vector<Index> s_idx;
  std::vector<double> s_val;
  std::vector<bool> has_coupling(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto j = static_cast<std::size_t>(idx[k]);
      if (j == i || val[k] == 0.0) continue;
      has_coupling[i] = true;
      if (std::abs(val[k]) >= theta * std::sqrt(diag[i] * diag[j])) {
        s_idx.push_back(idx[k]);
        s_val.push_back(std::abs(val[k]));
      }
    }
    s_off[i + 1] = s_idx.size();
  }
  std::vector<Index> agg(n, unaggregated);
  count = 0;
  // Phase 1: seed aggregates from nodes whose strong neighbourhood is untouched.
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != unaggregated || s_off[i] == s_off[i + 1]) continue;
    bool free = true;
    for (std::size_t k = s_off[i]; k < s_off[i + 1] && free; ++k)
      free = agg[static_cast<std::size_t>(s_idx[k])] == unaggregated;
    if (!free) continue;
    agg[i] = count;
    for (std::size_t k = s_off[i]; k < s_off[i + 1]; ++k) agg[static_cast<std::size_t>(s_idx[k])] = count;
    ++count;
  }
  // Phase 2: attach leftovers to the strongest neighbouring phase-1 aggregate.
  std::vector<Index> phase1 = agg;
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != unaggregated) continue;
    double best = -1.0;
    for (std::size_t k = s_off[i]; k < s_off[i + 1]; ++k) {
      const Index target = phase1[static_cast<std::size_t>(s_idx[k])];
      if (target != unaggregated && s_val[k] > best) {
        best = s_val[k];
        agg[i] = target;
      }
    }
  }
  // Phase 3: remaining strongly coupled nodes form new aggregates.
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != unaggregated || s_off[i] == s_off[i + 1]) continue;
    agg[i] = count;
    for (std::size_t k = s_off[i]; k < s_off[i + 1]; ++k)
      if (agg[static_cast<std::size_t>(s_idx[k])] == unaggregated) agg[static_cast<std::size_t>(s_idx[k])] = count;
    ++count;
  }
  // Phase 4: weakly coupled nodes join the neighbour they are most coupled to.
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != unaggregated || !has_coupling[i]) continue;
    double best = -1.0;
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto j = static_cast<std::size_t>(idx[k]);
      if (j == i || agg[j] == unaggregated) continue;
      if (std::abs(val[k]) > best) {
        best = std::abs(val[k]);
        agg[i] = agg[j];
      }
    }
    if (agg[i] == unaggregated) agg[i] = count++;
  }
  return agg;
}

/// P = (I - omega D^{-1} A) T for the piecewise-constant tentative T.
inline SparseMatrix smoothed_prolongation(const SparseMatrix& a, std::span<const double> diag,
                                          std::span<const Index> agg, Index count, double omega) {
  const std::size_t n = a.rows();
  std::vector<Triplet> t;
  t.reserve(a.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    if (agg[i] != unaggregated) t.push_back({static_cast<Index>(i), agg[i], 1.0});
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    const double scale = omega / diag[i];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Index target = agg[static_cast<std::size_t>(idx[k])];
      if (target != unaggregated) t.push_back({static_cast<Index>(i), target, -scale * val[k]});
    }
  }
  return SparseMatrix::from_triplets(n, static_cast<std::size_t>(count), std::move(t));
}

/// Drops entries smaller than `factor` times the largest magnitude in their
/// row, keeps at most `cap` of the largest survivors, and rescales them so
/// every row keeps its sum. Keeps coarse operators sparse on graphs with
/// small diameter.
inline SparseMatrix truncate_rows(const SparseMatrix& p, double factor, std::size_t cap) {
  std::vector<Triplet> t;
  t.reserve(p.nnz());
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto idx = p.row_indices(r);
    auto val = p.row_values(r);
    double big = 0.0, sum = 0.0;
    for (double v : val) {
      big = std::max(big, std::abs(v));
      sum += v;
    }
    order.clear();
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (std::abs(val[k]) >= factor * big) order.push_back(k);
    if (cap > 0 && order.size() > cap) {
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cap), order.end(),
                        [&](std::size_t a, std::size_t b) { return std::abs(val[a]) > std::abs(val[b]); });
      order.resize(cap);
    }
    double kept = 0.0;
    for (std::size_t k : order) kept += val[k];
    const double scale = kept != 0.0 ? sum / kept : 1.0;
    for (std::size_t k : order) t.push_back({static_cast<Index>(r), idx[k], scale * val[k]});
  }
  return SparseMatrix::from_triplets(p.rows(), p.cols(), std::move(t));
}

}  // namespace amg_detail

/// Builds a smoothed-aggregation hierarchy for an SPD matrix. Throws
/// SolverError if a diagonal entry is not positive.
inline AmgHierarchy build_hierarchy(const SparseMatrix& a, const AmgOptions& opt = {}) {
  if (a.rows() != a.cols()) throw SolverError("build_hierarchy: matrix is not square");
  AmgHierarchy h;
  SparseMatrix current = a;
  for (;;) {
    Vector diag = current.diagonal();
    for (std::size_t i = 0; i < diag.size(); ++i)
      if (!(diag[i] > 0.0))
        throw SolverError("build_hierarchy: nonpositive diagonal " + std::to_string(diag[i]) + " at row " +
                          std::to_string(i) + " on level " + std::to_string(h.levels.size()));
    AmgLevel level;
    level.omega = amg_detail::smoothing_weight(current, diag);
    level.smoother.resize(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) level.smoother[i] = level.omega / diag[i];

    const std::size_t n = current.rows();
    bool coarsen = n > opt.max_coarse && h.levels.size() + 1 < opt.max_levels;
    SparseMatrix prolongation;
    if (coarsen) {
      Index count = 0;
      const auto agg = amg_detail::aggregate(current, diag, opt.theta, count);
      const auto nc = static_cast<std::size_t>(count);
      if (nc == 0 || static_cast<double>(nc) > opt.stall_ratio * static_cast<double>(n)) {
        coarsen = false;
      } else {
        prolongation = amg_detail::truncate_rows(
            amg_detail::smoothed_prolongation(current, diag, agg, count, level.omega), opt.truncation,
            opt.max_row_entries);
      }
    }
    if (!coarsen) {
      level.op = std::move(current);
      if (level.op.rows() <= opt.max_dense) {
        h.coarse_factor = DenseCholesky(level.op);
        h.coarse_is_direct = true;
      } else {
        h.coarse_sweeps = opt.coarse_sweeps;
      }
      h.levels.push_back(std::move(level));
      break;
    }
    SparseMatrix coarse = galerkin_product(current, prolongation);
    level.restriction = prolongation.transpose();
    level.prolongation = std::move(prolongation);
    level.op = std::move(current);
    h.levels.push_back(std::move(level));
    current = std::move(coarse);
  }
  return h;
}

namespace amg_detail {

inline void jacobi(const AmgLevel& level, std::span<const double> b, std::span<double> x, Vector& work) {
  level.op.multiply(x, work);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += level.smoother[i] * (b[i] - work[i]);
}

inline void cycle(const AmgHierarchy& h, std::size_t l, std::span<const double> b, std::span<double> x) {
  const AmgLevel& level = h.levels[l];
  const std::size_t n = level.op.rows();
  Vector work(n);
  if (l + 1 == h.levels.size()) {
    if (h.coarse_is_direct) {
      h.coarse_factor.solve(b, x);
    } else {
      for (std::size_t s = 0; s < h.coarse_sweeps; ++s) jacobi(level, b, x, work);
    }
    return;
  }
  jacobi(level, b, x, work);
  level.op.multiply(x, work);
  for (std::size_t i = 0; i < n; ++i) work[i] = b[i] - work[i];
  const std::size_t nc = level.prolongation.cols();
  Vector bc(nc), xc(nc, 0.0);
  level.restriction.multiply(work, bc);
  cycle(h, l + 1, bc, xc);
  Vector correction(n);
  level.prolongation.multiply(xc, correction);
  for (std::size_t i = 0; i < n; ++i) x[i] += correction[i];
  jacobi(level, b, x, work);
}

}  // namespace amg_detail

/// One V(1,1) cycle with weighted-Jacobi smoothing and an exact coarsest solve.
inline Vector vcycle(const AmgHierarchy& h, std::span<const double> b, std::span<const double> x0) {
  Vector x(x0.begin(), x0.end());
  if (!h.levels.empty()) amg_detail::cycle(h, 0, b, x);
  return x;
}

/// Preconditioner application: one V-cycle from a zero initial guess.
inline auto amg_preconditioner(const AmgHierarchy& h) {
  return [&h](std::span<const double> in, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (!h.levels.empty()) amg_detail::cycle(h, 0, in, out);
  };
}

}  // namespace mcfipm
