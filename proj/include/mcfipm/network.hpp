#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"

namespace mcfipm {

using NodeId = Index;

struct Arc {
  NodeId tail = 0;
  NodeId head = 0;
  double cost = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const Arc&, const Arc&) = default;
};

/// A min-cost-flow instance: minimize sum cost*x subject to node balance
/// (outflow - inflow = supply) and lower <= x <= upper on every arc.
/// Validated on construction and immutable afterwards.
class Network {
public:
  Network() = default;

  Network(std::size_t nodes, std::vector<Arc> arcs, Vector supply)
      : n_(nodes), arcs_(std::move(arcs)), supply_(std::move(supply)) {
    validate();
  }

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_arcs() const noexcept { return arcs_.size(); }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  const Arc& arc(std::size_t j) const { return arcs_[j]; }
  const Vector& supply() const noexcept { return supply_; }

  Vector costs() const {
    Vector c(arcs_.size());
    for (std::size_t j = 0; j < arcs_.size(); ++j) c[j] = arcs_[j].cost;
    return c;
  }
  Vector lower_bounds() const {
    Vector l(arcs_.size());
    for (std::size_t j = 0; j < arcs_.size(); ++j) l[j] = arcs_[j].lower;
    return l;
  }
  Vector upper_bounds() const {
    Vector u(arcs_.size());
    for (std::size_t j = 0; j < arcs_.size(); ++j) u[j] = arcs_[j].upper;
    return u;
  }

  /// True when every cost, bound and supply is an integer.
  bool is_integral() const {
    auto integral = [](double v) { return std::isfinite(v) && v == std::floor(v); };
    for (const Arc& a : arcs_)
      if (!integral(a.cost) || !integral(a.lower) || !integral(a.upper)) return false;
    for (double b : supply_)
      if (!integral(b)) return false;
    return true;
  }

  /// (A x)_i = outflow_i - inflow_i
  Vector divergence(std::span<const double> flow) const {
    Vector out(n_, 0.0);
    for (std::size_t j = 0; j < arcs_.size(); ++j) {
      out[static_cast<std::size_t>(arcs_[j].tail)] += flow[j];
      out[static_cast<std::size_t>(arcs_[j].head)] -= flow[j];
    }
    return out;
  }

  double cost_of(std::span<const double> flow) const {
    double c = 0.0;
    for (std::size_t j = 0; j < arcs_.size(); ++j) c += arcs_[j].cost * flow[j];
    return c;
  }

  friend bool operator==(const Network&, const Network&) = default;

private:
  void validate() const {
    if (supply_.size() != n_)
      throw ValidationError("supply vector has " + std::to_string(supply_.size()) +
                            " entries, expected " + std::to_string(n_));
    for (std::size_t j = 0; j < arcs_.size(); ++j) {
      const Arc& a = arcs_[j];
      const std::string tag = "arc " + std::to_string(j) + ": ";
      if (a.tail < 0 || a.head < 0 || static_cast<std::size_t>(a.tail) >= n_ ||
          static_cast<std::size_t>(a.head) >= n_)
        throw ValidationError(tag + "node id out of range");
      if (a.tail == a.head) throw ValidationError(tag + "self-loop");
      if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !std::isfinite(a.cost))
        throw ValidationError(tag + "non-finite cost or bound");
      if (a.lower > a.upper) throw ValidationError(tag + "lower bound exceeds upper bound");
    }
    double total = 0.0;
    double scale = 0.0;
    for (double b : supply_) {
      if (!std::isfinite(b)) throw ValidationError("non-finite supply");
      total += b;
      scale += std::abs(b);
    }
    if (std::abs(total) > 1e-9 * std::max(1.0, scale))
      throw ValidationError("supplies do not balance (sum = " + std::to_string(total) + ")");
  }

  std::size_t n_ = 0;
  std::vector<Arc> arcs_;
  Vector supply_;
};

/// Node-arc incidence matrix: column j carries +1 at the tail and -1 at the
/// head of arc j, so A x = b with positive supply at sources.
inline SparseMatrix incidence_matrix(const Network& net) {
  std::vector<Triplet> t;
  t.reserve(2 * net.num_arcs());
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    t.push_back({a.tail, static_cast<Index>(j), 1.0});
    t.push_back({a.head, static_cast<Index>(j), -1.0});
  }
  return SparseMatrix::from_triplets(net.num_nodes(), net.num_arcs(), std::move(t));
}

}  // namespace mcfipm
