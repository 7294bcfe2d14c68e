#pragma once

// Desk-scale instance generators. Output depends only on the arguments and
// the explicit seed; no global random state is used.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "network.hpp"

namespace mcfipm {

/// SplitMix64: a 64-bit generator whose stream can be split by reseeding
/// from its own output.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  SplitMix64 split() noexcept { return SplitMix64(next()); }

  /// Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
    std::uint64_t r;
    do r = next();
    while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(i) - 1))]);
  }

private:
  std::uint64_t state_;
};

namespace detail {

inline std::size_t ceil_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r < n) ++r;
  while (r > 0 && (r - 1) * (r - 1) >= n) --r;
  return r;
}

/// count distinct values from [0, n), in random order.
inline std::vector<NodeId> sample_distinct(SplitMix64& rng, std::size_t n, std::size_t count) {
  std::vector<NodeId> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<NodeId>(i);
  for (std::size_t i = 0; i < count; ++i)
    std::swap(all[i], all[static_cast<std::size_t>(
                          rng.uniform(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1))]);
  all.resize(count);
  return all;
}

}  // namespace detail

/// rows x cols 4-neighbour grid with both orientations of every edge. Costs
/// and capacities are uniform integers in [1, 1000]. Supplies come from
/// routing ceil(sqrt(n)) source/sink pairs along random monotone grid paths
/// within the remaining capacity, so every instance is feasible.
inline Network gen_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("gen_grid: rows and cols must be >= 2");
  SplitMix64 rng(seed);
  const std::size_t n = rows * cols;
  auto id = [cols](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * cols + c); };

  std::vector<Arc> arcs;
  arcs.reserve(4 * n);
  // arc index for a move out of node v: 0 right, 1 left, 2 down, 3 up
  std::vector<std::array<std::int64_t, 4>> move(n, {-1, -1, -1, -1});
  auto add_edge = [&](NodeId u, NodeId v, int fwd, int bwd) {
    for (int dir = 0; dir < 2; ++dir) {
      Arc a;
      a.tail = dir == 0 ? u : v;
      a.head = dir == 0 ? v : u;
      a.cost = static_cast<double>(rng.uniform(1, 1000));
      a.lower = 0.0;
      a.upper = static_cast<double>(rng.uniform(1, 1000));
      move[static_cast<std::size_t>(a.tail)][static_cast<std::size_t>(dir == 0 ? fwd : bwd)] =
          static_cast<std::int64_t>(arcs.size());
      arcs.push_back(a);
    }
  };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c + 1 < cols; ++c) add_edge(id(r, c), id(r, c + 1), 0, 1);
  for (std::size_t r = 0; r + 1 < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) add_edge(id(r, c), id(r + 1, c), 2, 3);

  const std::size_t k = detail::ceil_sqrt(n);
  const auto terminals = detail::sample_distinct(rng, n, std::min(2 * k, n));
  Vector residual(arcs.size());
  for (std::size_t j = 0; j < arcs.size(); ++j) residual[j] = arcs[j].upper;
  Vector supply(n, 0.0);
  std::vector<std::size_t> path;
  for (std::size_t p = 0; p < k && p + k < terminals.size(); ++p) {
    const auto s = static_cast<std::size_t>(terminals[p]);
    const auto t = static_cast<std::size_t>(terminals[p + k]);
    const std::size_t sr = s / cols, sc = s % cols, tr = t / cols, tc = t % cols;
    std::vector<int> steps;
    for (std::size_t i = 0; i < (sc < tc ? tc - sc : sc - tc); ++i) steps.push_back(sc < tc ? 0 : 1);
    for (std::size_t i = 0; i < (sr < tr ? tr - sr : sr - tr); ++i) steps.push_back(sr < tr ? 2 : 3);
    rng.shuffle(steps);
    path.clear();
    std::size_t v = s;
    double bottleneck = 1e300;
    for (int dir : steps) {
      const auto j = static_cast<std::size_t>(move[v][static_cast<std::size_t>(dir)]);
      path.push_back(j);
      bottleneck = std::min(bottleneck, residual[j]);
      v = static_cast<std::size_t>(arcs[j].head);
    }
    const double amount = std::min(static_cast<double>(rng.uniform(1, 1000)), bottleneck);
    if (amount <= 0.0) continue;
    for (std::size_t j : path) residual[j] -= amount;
    supply[s] += amount;
    supply[t] -= amount;
  }
  return Network(n, std::move(arcs), std::move(supply));
}

/// Sparse random network with m = 8n arcs. A random Hamiltonian path is laid
/// down in both orientations as a high-capacity skeleton (capacity equal to
/// the total supply) so the instance is connected and feasible; the other
/// arcs have uniform endpoints, capacities in [1, 1000] and costs in
/// [1, 10000]. ceil(sqrt(n)) sources share a total supply of 1000*ceil(sqrt(n)),
/// and as many sinks share the matching demand.
inline Network gen_random_sparse(std::size_t n, std::uint64_t seed) {
  if (n < 16) throw std::invalid_argument("gen_random_sparse: n must be >= 16");
  SplitMix64 rng(seed);
  const std::size_t m = 8 * n;
  const std::size_t k = detail::ceil_sqrt(n);
  const double total = 1000.0 * static_cast<double>(k);

  std::vector<Arc> arcs;
  arcs.reserve(m);
  const auto order = detail::sample_distinct(rng, n, n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (int dir = 0; dir < 2; ++dir) {
      Arc a;
      a.tail = dir == 0 ? order[i] : order[i + 1];
      a.head = dir == 0 ? order[i + 1] : order[i];
      a.cost = static_cast<double>(rng.uniform(1, 10000));
      a.upper = total;
      arcs.push_back(a);
    }
  const auto last = static_cast<std::int64_t>(n) - 1;
  while (arcs.size() < m) {
    Arc a;
    a.tail = static_cast<NodeId>(rng.uniform(0, last));
    do a.head = static_cast<NodeId>(rng.uniform(0, last));
    while (a.head == a.tail);
    a.cost = static_cast<double>(rng.uniform(1, 10000));
    a.upper = static_cast<double>(rng.uniform(1, 1000));
    arcs.push_back(a);
  }

  // Split the total into k positive integer parts via k-1 distinct cut points.
  auto split = [&](std::size_t parts) {
    std::vector<double> cuts{0.0, total};
    const auto inner = detail::sample_distinct(rng, static_cast<std::size_t>(total) - 1, parts - 1);
    for (NodeId c : inner) cuts.push_back(static_cast<double>(c) + 1.0);
    std::sort(cuts.begin(), cuts.end());
    Vector out(parts);
    for (std::size_t i = 0; i < parts; ++i) out[i] = cuts[i + 1] - cuts[i];
    return out;
  };
  const auto terminals = detail::sample_distinct(rng, n, 2 * k);
  const Vector give = split(k);
  const Vector take = split(k);
  Vector supply(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    supply[static_cast<std::size_t>(terminals[i])] += give[i];
    supply[static_cast<std::size_t>(terminals[k + i])] -= take[i];
  }
  return Network(n, std::move(arcs), std::move(supply));
}

}  // namespace mcfipm
