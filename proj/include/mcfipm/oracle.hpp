#pragma once

// Exact successive-shortest-path solver in 64-bit integer arithmetic. Used as
// ground truth for the interior-point solver, so it favours being obviously
// correct over being fast.

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <vector>

#include "network.hpp"

namespace mcfipm {

enum class FlowStatus { optimal, infeasible };

struct FlowSolution {
  Vector flow;
  double cost = 0.0;
  FlowStatus status = FlowStatus::infeasible;
  /// Node potentials certifying optimality: every residual arc has
  /// nonnegative reduced cost cost + potential[tail] - potential[head].
  std::vector<std::int64_t> potentials;
};

namespace detail {

__extension__ typedef __int128 int128;

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("ssp: integer overflow");
  return r;
}

inline std::int64_t to_int(double v) {
  if (std::abs(v) > 9.0e15) throw std::overflow_error("ssp: value exceeds exact integer range");
  return static_cast<std::int64_t>(v);
}

class ResidualGraph {
public:
  struct Edge {
    std::int32_t to;
    std::int64_t cap;
    std::int64_t cost;
  };

  explicit ResidualGraph(std::size_t nodes) : adj_(nodes) {}

  /// Returns the index of the forward edge; its reverse is index ^ 1.
  std::size_t add(std::int32_t from, std::int32_t to, std::int64_t cap, std::int64_t cost) {
    const std::size_t id = edges_.size();
    edges_.push_back({to, cap, cost});
    edges_.push_back({from, 0, -cost});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  void push(std::size_t e, std::int64_t amount) {
    edges_[e].cap -= amount;
    edges_[e ^ 1].cap += amount;
  }

  std::size_t size() const noexcept { return adj_.size(); }
  const std::vector<std::size_t>& out(std::size_t v) const { return adj_[v]; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  std::int32_t from(std::size_t e) const { return edges_[e ^ 1].to; }

private:
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

}  // namespace detail

/// Successive shortest paths with node potentials. Lower bounds are shifted
/// to zero and negative-cost arcs pre-saturated so that Bellman-Ford yields
/// feasible initial potentials; afterwards each phase runs Dijkstra on reduced
/// costs and pushes a blocking flow through the zero-reduced-cost subgraph.
inline FlowSolution ssp_solve(const Network& net) {
  if (!net.is_integral())
    throw UnsupportedInputError("ssp_solve: costs, bounds and supplies must be integral");
  using detail::checked_add;
  using detail::to_int;
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;

  const std::size_t n = net.num_nodes();
  const std::size_t m = net.num_arcs();
  const std::size_t source = n, sink = n + 1;
  detail::ResidualGraph g(n + 2);

  std::vector<std::int64_t> excess(n);
  for (std::size_t i = 0; i < n; ++i) excess[i] = to_int(net.supply()[i]);
  std::vector<std::size_t> arc_edge(m);
  std::vector<std::int64_t> base(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Arc& a = net.arc(j);
    const std::int64_t lo = to_int(a.lower), cap = to_int(a.upper) - lo, c = to_int(a.cost);
    base[j] = lo;
    excess[static_cast<std::size_t>(a.tail)] -= lo;
    excess[static_cast<std::size_t>(a.head)] += lo;
    arc_edge[j] = g.add(a.tail, a.head, cap, c);
    if (c < 0 && cap > 0) {
      g.push(arc_edge[j], cap);
      excess[static_cast<std::size_t>(a.tail)] -= cap;
      excess[static_cast<std::size_t>(a.head)] += cap;
    }
  }
  std::int64_t required = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (excess[i] > 0) {
      g.add(static_cast<std::int32_t>(source), static_cast<std::int32_t>(i), excess[i], 0);
      required = checked_add(required, excess[i]);
    } else if (excess[i] < 0) {
      g.add(static_cast<std::int32_t>(i), static_cast<std::int32_t>(sink), -excess[i], 0);
    }
  }

  // Bellman-Ford (queue-based) from the super source for initial potentials.
  std::vector<std::int64_t> pot(n + 2, inf);
  {
    std::deque<std::size_t> queue{source};
    std::vector<bool> queued(n + 2, false);
    pot[source] = 0;
    queued[source] = true;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      queued[v] = false;
      for (std::size_t e : g.out(v)) {
        const auto& ed = g.edge(e);
        const auto w = static_cast<std::size_t>(ed.to);
        if (ed.cap > 0 && pot[v] + ed.cost < pot[w]) {
          pot[w] = pot[v] + ed.cost;
          if (!queued[w]) {
            queued[w] = true;
            queue.push_back(w);
          }
        }
      }
    }
    // Nodes the source cannot reach stay unreachable for the whole run; giving
    // them the largest finite distance keeps every reduced cost nonnegative.
    std::int64_t far = 0;
    for (auto p : pot)
      if (p < inf) far = std::max(far, p);
    for (auto& p : pot)
      if (p == inf) p = far;
  }

  std::int64_t sent = 0;
  std::vector<std::int64_t> dist(n + 2);
  std::vector<int> level(n + 2);
  std::vector<std::size_t> cursor(n + 2);
  auto reduced = [&](std::size_t e) {
    return g.edge(e).cost + pot[static_cast<std::size_t>(g.from(e))] -
           pot[static_cast<std::size_t>(g.edge(e).to)];
  };

  while (sent < required) {
    // Dijkstra on reduced costs.
    std::fill(dist.begin(), dist.end(), inf);
    using Item = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0;
    heap.push({0, source});
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d != dist[v]) continue;
      for (std::size_t e : g.out(v)) {
        if (g.edge(e).cap <= 0) continue;
        const auto w = static_cast<std::size_t>(g.edge(e).to);
        const std::int64_t nd = checked_add(d, reduced(e));
        if (nd < dist[w]) {
          dist[w] = nd;
          heap.push({nd, w});
        }
      }
    }
    if (dist[sink] >= inf) break;
    for (std::size_t v = 0; v < n + 2; ++v) pot[v] += std::min(dist[v], dist[sink]);

    // Blocking flow on admissible (zero reduced cost) residual edges.
    for (;;) {
      std::fill(level.begin(), level.end(), -1);
      std::deque<std::size_t> bfs{source};
      level[source] = 0;
      while (!bfs.empty()) {
        const std::size_t v = bfs.front();
        bfs.pop_front();
        for (std::size_t e : g.out(v)) {
          const auto w = static_cast<std::size_t>(g.edge(e).to);
          if (g.edge(e).cap > 0 && reduced(e) == 0 && level[w] < 0) {
            level[w] = level[v] + 1;
            bfs.push_back(w);
          }
        }
      }
      if (level[sink] < 0) break;
      std::fill(cursor.begin(), cursor.end(), 0);
      // Iterative DFS with current-arc pointers.
      std::vector<std::size_t> stack_edges;
      for (;;) {
        std::size_t v = stack_edges.empty() ? source : static_cast<std::size_t>(g.edge(stack_edges.back()).to);
        if (v == sink) {
          std::int64_t push = required - sent;
          for (std::size_t e : stack_edges) push = std::min(push, g.edge(e).cap);
          for (std::size_t e : stack_edges) g.push(e, push);
          sent += push;
          stack_edges.clear();
          if (sent >= required) break;
          continue;
        }
        bool advanced = false;
        const auto& out = g.out(v);
        while (cursor[v] < out.size()) {
          const std::size_t e = out[cursor[v]];
          const auto w = static_cast<std::size_t>(g.edge(e).to);
          if (g.edge(e).cap > 0 && reduced(e) == 0 && level[w] == level[v] + 1) {
            stack_edges.push_back(e);
            advanced = true;
            break;
          }
          ++cursor[v];
        }
        if (advanced) continue;
        if (v == source) break;
        level[v] = -1;  // dead end
        stack_edges.pop_back();
        const std::size_t u =
            stack_edges.empty() ? source : static_cast<std::size_t>(g.edge(stack_edges.back()).to);
        ++cursor[u];
      }
      if (sent >= required) break;
    }
  }

  FlowSolution sol;
  sol.flow.assign(m, 0.0);
  if (sent < required) {
    sol.status = FlowStatus::infeasible;
    return sol;
  }
  detail::int128 cost = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::int64_t residual_back = g.edge(arc_edge[j] ^ 1).cap;  // flow pushed over the arc
    const std::int64_t x = base[j] + residual_back;
    sol.flow[j] = static_cast<double>(x);
    cost += static_cast<detail::int128>(x) * to_int(net.arc(j).cost);
  }
  sol.cost = static_cast<double>(cost);
  sol.status = FlowStatus::optimal;
  sol.potentials.assign(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(n));
  return sol;
}

/// Checks the reduced-cost optimality certificate of an SSP solution.
inline bool certifies_optimality(const Network& net, const FlowSolution& sol) {
  if (sol.status != FlowStatus::optimal || sol.potentials.size() != net.num_nodes()) return false;
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    const double rc = a.cost + static_cast<double>(sol.potentials[static_cast<std::size_t>(a.tail)]) -
                      static_cast<double>(sol.potentials[static_cast<std::size_t>(a.head)]);
    if (sol.flow[j] < a.upper && rc < 0) return false;
    if (sol.flow[j] > a.lower && rc > 0) return false;
  }
  return true;
}

}  // namespace mcfipm
