#pragma once

// Reduction of the Newton saddle-point system
//
//   [ Dt  A^T ] [dx]   [rx]
//   [ A   0   ] [dy] = [ry]
//
// to the weighted graph Laplacian L = A Dt^{-1} A^T, with active arcs removed
// from the graph (their dx is prescribed) and one node per weakly connected
// component pinned to remove the constant null space.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "active_set.hpp"
#include "amg.hpp"
#include "errors.hpp"
#include "krylov.hpp"
#include "network.hpp"
#include "sparse.hpp"

namespace mcfipm {

/// Per-arc diagonal of the regularized (1,1) block. Arcs that are not free
/// carry dtilde = 1 and a prescribed step.
struct Metric {
  Vector dtilde;
  std::vector<char> free;
  Vector fixed_step;

  static Metric unit(std::size_t arcs) {
    return {Vector(arcs, 1.0), std::vector<char>(arcs, 1), Vector(arcs, 0.0)};
  }
};

struct SchurOperator {
  SparseMatrix laplacian;
  std::vector<Index> labels;  ///< component label per node (max node id in the component)
  std::vector<Index> pinned;  ///< representative node per component, empty until pinned
  bool is_pinned = false;

  std::size_t num_components() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) c += labels[i] == static_cast<Index>(i);
    return c;
  }
};

/// Component labels by max-label propagation over the free-arc graph: every
/// node starts with its own id and repeatedly takes the largest label among
/// itself and its neighbours. Sweeps alternate direction and update in place.
inline std::vector<Index> connected_components_labelprop(const Network& net, const ActiveSet& active) {
  const std::size_t n = net.num_nodes();
  // symmetric adjacency of the free-arc graph
  std::vector<std::size_t> off(n + 1, 0);
  for (std::size_t j = 0; j < net.num_arcs(); ++j)
    if (active.is_free(j)) {
      ++off[static_cast<std::size_t>(net.arc(j).tail) + 1];
      ++off[static_cast<std::size_t>(net.arc(j).head) + 1];
    }
  for (std::size_t i = 0; i < n; ++i) off[i + 1] += off[i];
  std::vector<Index> adj(off[n]);
  {
    std::vector<std::size_t> pos(off.begin(), off.end() - 1);
    for (std::size_t j = 0; j < net.num_arcs(); ++j)
      if (active.is_free(j)) {
        const Arc& a = net.arc(j);
        adj[pos[static_cast<std::size_t>(a.tail)]++] = a.head;
        adj[pos[static_cast<std::size_t>(a.head)]++] = a.tail;
      }
  }
  std::vector<Index> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<Index>(i);
  auto relax = [&](std::size_t i) {
    Index best = y[i];
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) best = std::max(best, y[static_cast<std::size_t>(adj[k])]);
    const bool changed = best != y[i];
    y[i] = best;
    return changed;
  };
  for (bool changed = true, forward = true; changed; forward = !forward) {
    changed = false;
    if (forward)
      for (std::size_t i = 0; i < n; ++i) changed |= relax(i);
    else
      for (std::size_t i = n; i-- > 0;) changed |= relax(i);
  }
  return y;
}

/// Sparsity pattern of the Schur Laplacian for a fixed active set, with the
/// scatter positions of every free arc precomputed. Every node keeps its
/// diagonal slot.
class SchurPattern {
public:
  SchurPattern() = default;

  SchurPattern(const Network& net, const ActiveSet& active) : arcs_(net.num_arcs()) {
    const std::size_t n = net.num_nodes();
    std::vector<Triplet> t;
    t.reserve(n + 2 * net.num_arcs());
    for (std::size_t i = 0; i < n; ++i) t.push_back({static_cast<Index>(i), static_cast<Index>(i), 1.0});
    for (std::size_t j = 0; j < net.num_arcs(); ++j)
      if (active.is_free(j)) {
        const Arc& a = net.arc(j);
        t.push_back({a.tail, a.head, 1.0});
        t.push_back({a.head, a.tail, 1.0});
      }
    pattern_ = SparseMatrix::from_triplets(n, n, std::move(t));
    std::fill(pattern_.values().begin(), pattern_.values().end(), 0.0);
    auto slot = [&](Index r, Index c) {
      auto idx = pattern_.row_indices(static_cast<std::size_t>(r));
      return pattern_.offsets()[static_cast<std::size_t>(r)] +
             static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), c) - idx.begin());
    };
    for (std::size_t j = 0; j < net.num_arcs(); ++j) {
      if (!active.is_free(j)) continue;
      const Arc& a = net.arc(j);
      arcs_[j] = {slot(a.tail, a.tail), slot(a.head, a.head), slot(a.tail, a.head), slot(a.head, a.tail), true};
    }
  }

  /// L = sum over free arcs of a_j a_j^T / dtilde_j.
  SparseMatrix assemble(const Metric& metric) const {
    SparseMatrix l = pattern_;
    auto v = l.values();
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t j = 0; j < arcs_.size(); ++j) {
      const Slots& s = arcs_[j];
      if (!s.used) continue;
      const double w = 1.0 / metric.dtilde[j];
      v[s.tt] += w;
      v[s.hh] += w;
      v[s.th] -= w;
      v[s.ht] -= w;
    }
    return l;
  }

private:
  struct Slots {
    std::size_t tt = 0, hh = 0, th = 0, ht = 0;
    bool used = false;
  };
  SparseMatrix pattern_;
  std::vector<Slots> arcs_;
};

inline SchurOperator assemble_schur(const Network& net, const Metric& metric, const ActiveSet& active) {
  SchurOperator op;
  op.laplacian = SchurPattern(net, active).assemble(metric);
  op.labels = connected_components_labelprop(net, active);
  return op;
}

/// Replaces row and column of each component's label node by the identity.
/// Idempotent.
inline SchurOperator pin_components(SchurOperator op) {
  if (op.is_pinned) return op;
  const std::size_t n = op.laplacian.rows();
  std::vector<char> pin(n, 0);
  op.pinned.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (op.labels[i] == static_cast<Index>(i)) {
      pin[i] = 1;
      op.pinned.push_back(static_cast<Index>(i));
    }
  const auto& l = op.laplacian;
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<Index> indices;
  Vector values;
  indices.reserve(l.nnz());
  values.reserve(l.nnz());
  for (std::size_t r = 0; r < n; ++r) {
    auto idx = l.row_indices(r);
    auto val = l.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto c = static_cast<std::size_t>(idx[k]);
      if (pin[r] || pin[c]) {
        if (r == c) {
          indices.push_back(idx[k]);
          values.push_back(1.0);
        }
        continue;
      }
      indices.push_back(idx[k]);
      values.push_back(val[k]);
    }
    offsets[r + 1] = indices.size();
  }
  op.laplacian = SparseMatrix(n, n, std::move(offsets), std::move(indices), std::move(values));
  op.is_pinned = true;
  return op;
}

enum class KrylovMethod { cg, bicgstab };

struct NewtonSolveOptions {
  double krylov_tol = 1e-8;
  std::size_t krylov_maxit = 500;
  KrylovMethod method = KrylovMethod::cg;
};

struct NewtonStep {
  Vector dx;
  Vector dy;
  KrylovStats krylov;
};

/// Right-hand side of the pinned Laplacian system: A Dt^{-1} rx - ry over
/// free arcs, with prescribed steps of non-free arcs moved to the right and
/// pinned entries zeroed.
inline Vector schur_rhs(const SchurOperator& op, const Metric& metric, const Network& net,
                        std::span<const double> rx, std::span<const double> ry) {
  Vector r(ry.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -ry[i];
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    const double v = metric.free[j] ? rx[j] / metric.dtilde[j] : metric.fixed_step[j];
    r[static_cast<std::size_t>(a.tail)] += v;
    r[static_cast<std::size_t>(a.head)] -= v;
  }
  for (Index p : op.pinned) r[static_cast<std::size_t>(p)] = 0.0;
  return r;
}

/// dx from dy by back-substitution through the first block row.
inline Vector back_substitute(const Metric& metric, const Network& net, std::span<const double> rx,
                              std::span<const double> dy) {
  Vector dx(net.num_arcs());
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    dx[j] = metric.free[j] ? (rx[j] - (dy[static_cast<std::size_t>(a.tail)] - dy[static_cast<std::size_t>(a.head)])) /
                                 metric.dtilde[j]
                           : metric.fixed_step[j];
  }
  return dx;
}

/// Solves the block system through the pinned Schur complement with a
/// preconditioned Krylov method. Throws KrylovError when the iteration does
/// not reach krylov_tol within krylov_maxit.
template <LinearOperator Precond>
NewtonStep solve_newton_system(const SchurOperator& op, const Metric& metric, const Network& net,
                               std::span<const double> rx, std::span<const double> ry, Precond&& precond,
                               const NewtonSolveOptions& opt) {
  const Vector r = schur_rhs(op, metric, net, rx, ry);
  auto apply = matrix_operator(op.laplacian);
  KrylovResult res = opt.method == KrylovMethod::cg
                         ? cg(apply, precond, r, opt.krylov_tol, opt.krylov_maxit)
                         : bicgstab(apply, precond, r, opt.krylov_tol, opt.krylov_maxit);
  if (!res.stats.converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Krylov solver did not converge: %zu iterations, relative residual %.3e%s",
                  res.stats.iterations, res.stats.relative_residual, res.stats.breakdown ? " (breakdown)" : "");
    throw KrylovError(buf, res.stats.history);
  }
  NewtonStep step;
  step.dx = back_substitute(metric, net, rx, res.x);
  step.dy = std::move(res.x);
  step.krylov = std::move(res.stats);
  return step;
}

/// Relative residual of the full block system, with prescribed rows
/// dx_j = fixed_step_j for arcs that are not free.
inline double block_residual(const Metric& metric, const Network& net, std::span<const double> dx,
                             std::span<const double> dy, std::span<const double> rx, std::span<const double> ry) {
  double res2 = 0.0, rhs2 = 0.0;
  Vector div(net.num_nodes(), 0.0);
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    const auto t = static_cast<std::size_t>(a.tail), h = static_cast<std::size_t>(a.head);
    double e, rhs;
    if (metric.free[j]) {
      rhs = rx[j];
      e = metric.dtilde[j] * dx[j] + dy[t] - dy[h] - rhs;
    } else {
      rhs = metric.fixed_step[j];
      e = dx[j] - rhs;
    }
    res2 += e * e;
    rhs2 += rhs * rhs;
    div[t] += dx[j];
    div[h] -= dx[j];
  }
  for (std::size_t i = 0; i < div.size(); ++i) {
    const double e = div[i] - ry[i];
    res2 += e * e;
    rhs2 += ry[i] * ry[i];
  }
  return rhs2 > 0.0 ? std::sqrt(res2 / rhs2) : std::sqrt(res2);
}

/// Abstract Newton-system solver. prepare() is called once per Newton
/// iteration; solve() may then be called several times with the same matrix.
class NewtonLinearSolver {
public:
  virtual ~NewtonLinearSolver() = default;
  virtual void prepare(const Network& net, const Metric& metric, const ActiveSet& active) = 0;
  virtual NewtonStep solve(std::span<const double> rx, std::span<const double> ry) = 0;
};

struct SchurSolverStats {
  std::size_t components = 0;
  std::size_t amg_levels = 0;
  double operator_complexity = 1.0;
  std::vector<std::size_t> level_sizes;
  std::vector<std::size_t> level_nnz;
};

/// AMG-preconditioned Schur solver. The sparsity pattern and component labels
/// are recomputed only when the active set changes; the AMG hierarchy is
/// rebuilt on every prepare() and shared by all solves until the next one.
class SchurNewtonSolver final : public NewtonLinearSolver {
public:
  SchurNewtonSolver(NewtonSolveOptions opt, AmgOptions amg = {}) : opt_(opt), amg_(amg) {}

  void prepare(const Network& net, const Metric& metric, const ActiveSet& active) override {
    net_ = &net;
    metric_ = metric;
    if (!have_pattern_ || !(active == active_)) {
      pattern_ = SchurPattern(net, active);
      labels_ = connected_components_labelprop(net, active);
      active_ = active;
      have_pattern_ = true;
    }
    SchurOperator op;
    op.laplacian = pattern_.assemble(metric_);
    op.labels = labels_;
    op_ = pin_components(std::move(op));
    hierarchy_ = build_hierarchy(op_.laplacian, amg_);
    stats_.components = op_.pinned.size();
    stats_.amg_levels = hierarchy_.num_levels();
    stats_.operator_complexity = hierarchy_.operator_complexity();
    stats_.level_sizes = hierarchy_.level_sizes();
    stats_.level_nnz.clear();
    for (const auto& l : hierarchy_.levels) stats_.level_nnz.push_back(l.op.nnz());
  }

  NewtonStep solve(std::span<const double> rx, std::span<const double> ry) override {
    return solve_newton_system(op_, metric_, *net_, rx, ry, amg_preconditioner(hierarchy_), opt_);
  }

  const SchurOperator& schur_operator() const noexcept { return op_; }
  const AmgHierarchy& hierarchy() const noexcept { return hierarchy_; }
  const SchurSolverStats& stats() const noexcept { return stats_; }

private:
  NewtonSolveOptions opt_;
  AmgOptions amg_;
  const Network* net_ = nullptr;
  Metric metric_;
  ActiveSet active_;
  bool have_pattern_ = false;
  SchurPattern pattern_;
  std::vector<Index> labels_;
  SchurOperator op_;
  AmgHierarchy hierarchy_;
  SchurSolverStats stats_;
};

}  // namespace mcfipm
