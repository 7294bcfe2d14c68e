#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mcfipm.hpp"

namespace testing_support {

using mcfipm::Arc;
using mcfipm::Index;
using mcfipm::Network;
using mcfipm::Vector;
using Dense = std::vector<Vector>;

/// Gaussian elimination with partial pivoting. Throws on a singular matrix.
inline Vector dense_solve(Dense a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    if (std::abs(a[piv][k]) < 1e-300) throw std::runtime_error("dense_solve: singular");
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Cholesky succeeds iff the symmetric matrix is positive definite.
inline bool is_positive_definite(const Dense& a) {
  const std::size_t n = a.size();
  Dense l(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0)) return false;
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return true;
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double min_eigenvalue(Dense a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mn = std::min(mn, a[i][i]);
  return mn;
}

inline Dense dense_product(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Dense c(n, Vector(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l)
      if (a[i][l] != 0.0)
        for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

inline Dense dense_transpose(const Dense& a) {
  if (a.empty()) return {};
  Dense t(a[0].size(), Vector(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Union-find component labels, each node labelled with the largest id in
/// its component over the free arcs.
inline std::vector<Index> union_find_labels(const Network& net, const mcfipm::ActiveSet& active) {
  const std::size_t n = net.num_nodes();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
    return parent[v] == v ? v : parent[v] = find(parent[v]);
  };
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    if (!active.is_free(j)) continue;
    const std::size_t a = find(static_cast<std::size_t>(net.arc(j).tail));
    const std::size_t b = find(static_cast<std::size_t>(net.arc(j).head));
    if (a != b) parent[a] = b;
  }
  std::vector<Index> best(n, -1);
  for (std::size_t i = 0; i < n; ++i) best[find(i)] = std::max(best[find(i)], static_cast<Index>(i));
  std::vector<Index> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = best[find(i)];
  return labels;
}

/// Small random network: arcs with random endpoints, integral data. Not
/// necessarily connected or feasible.
inline Network random_small_network(mcfipm::SplitMix64& rng, std::size_t n, std::size_t m, std::int64_t max_cap,
                                    std::int64_t min_cost, std::int64_t max_cost, bool lower_bounds = false) {
  std::vector<Arc> arcs;
  for (std::size_t j = 0; j < m; ++j) {
    Arc a;
    a.tail = static_cast<Index>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    do a.head = static_cast<Index>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    while (a.head == a.tail);
    a.cost = static_cast<double>(rng.uniform(min_cost, max_cost));
    a.upper = static_cast<double>(rng.uniform(1, max_cap));
    a.lower = lower_bounds ? static_cast<double>(rng.uniform(0, static_cast<std::int64_t>(a.upper))) : 0.0;
    arcs.push_back(a);
  }
  Vector supply(n, 0.0);
  const std::int64_t moves = rng.uniform(0, static_cast<std::int64_t>(n));
  for (std::int64_t k = 0; k < moves; ++k) {
    const auto s = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    const auto t = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    const double amount = static_cast<double>(rng.uniform(1, max_cap));
    supply[s] += amount;
    supply[t] -= amount;
  }
  return Network(n, std::move(arcs), std::move(supply));
}

/// Minimum cost over every integral flow within the bounds that satisfies
/// the node balances; nullopt when there is none.
inline std::optional<double> brute_force_min_cost(const Network& net) {
  const std::size_t m = net.num_arcs();
  std::vector<double> x(m);
  std::optional<double> best;
  Vector excess = net.supply();
  std::function<void(std::size_t, double)> rec = [&](std::size_t j, double cost) {
    if (j == m) {
      for (double e : excess)
        if (e != 0.0) return;
      if (!best || cost < *best) best = cost;
      return;
    }
    const Arc& a = net.arc(j);
    for (double v = a.lower; v <= a.upper; v += 1.0) {
      excess[static_cast<std::size_t>(a.tail)] -= v;
      excess[static_cast<std::size_t>(a.head)] += v;
      rec(j + 1, cost + v * a.cost);
      excess[static_cast<std::size_t>(a.tail)] += v;
      excess[static_cast<std::size_t>(a.head)] -= v;
    }
  };
  rec(0, 0.0);
  return best;
}

/// Newton solver that assembles the full saddle-point matrix densely and
/// solves it by LU, with the component representatives pinned through
/// dy_p = 0 in place of their balance row. Reference for the Schur path.
class DenseNewtonSolver final : public mcfipm::NewtonLinearSolver {
public:
  void prepare(const Network& net, const mcfipm::Metric& metric, const mcfipm::ActiveSet& active) override {
    net_ = &net;
    metric_ = metric;
    labels_ = union_find_labels(net, active);
  }

  mcfipm::NewtonStep solve(std::span<const double> rx, std::span<const double> ry) override {
    const std::size_t m = net_->num_arcs(), n = net_->num_nodes(), dim = m + n;
    Dense k(dim, Vector(dim, 0.0));
    Vector rhs(dim, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto t = static_cast<std::size_t>(net_->arc(j).tail);
      const auto h = static_cast<std::size_t>(net_->arc(j).head);
      if (metric_.free[j]) {
        k[j][j] = metric_.dtilde[j];
        k[j][m + t] += 1.0;
        k[j][m + h] -= 1.0;
        rhs[j] = rx[j];
      } else {
        k[j][j] = 1.0;
        rhs[j] = metric_.fixed_step[j];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (labels_[i] == static_cast<Index>(i)) {
        k[m + i][m + i] = 1.0;
        continue;
      }
      rhs[m + i] = ry[i];
    }
    for (std::size_t j = 0; j < m; ++j) {
      const auto t = static_cast<std::size_t>(net_->arc(j).tail);
      const auto h = static_cast<std::size_t>(net_->arc(j).head);
      if (labels_[t] != static_cast<Index>(t)) k[m + t][j] += 1.0;
      if (labels_[h] != static_cast<Index>(h)) k[m + h][j] -= 1.0;
    }
    const Vector sol = dense_solve(std::move(k), std::move(rhs));
    mcfipm::NewtonStep step;
    step.dx.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(m));
    step.dy.assign(sol.begin() + static_cast<std::ptrdiff_t>(m), sol.end());
    step.krylov.converged = true;
    return step;
  }

private:
  const Network* net_ = nullptr;
  mcfipm::Metric metric_;
  std::vector<Index> labels_;
};

inline mcfipm::SparseMatrix grid_laplacian(std::size_t k) {
  std::vector<mcfipm::Triplet> t;
  auto id = [k](std::size_t r, std::size_t c) { return static_cast<Index>(r * k + c); };
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      auto edge = [&](Index a, Index b) {
        t.push_back({a, a, 1.0});
        t.push_back({b, b, 1.0});
        t.push_back({a, b, -1.0});
        t.push_back({b, a, -1.0});
      };
      if (c + 1 < k) edge(id(r, c), id(r, c + 1));
      if (r + 1 < k) edge(id(r, c), id(r + 1, c));
    }
  return mcfipm::SparseMatrix::from_triplets(k * k, k * k, std::move(t));
}

/// Unit-metric grid Laplacian with the last node pinned.
inline mcfipm::SparseMatrix pinned_grid_laplacian(std::size_t k) {
  mcfipm::SchurOperator op;
  op.laplacian = grid_laplacian(k);
  op.labels.assign(k * k, static_cast<Index>(k * k - 1));
  return mcfipm::pin_components(std::move(op)).laplacian;
}

}  // namespace testing_support
