#pragma once

// DIMACS min-cost-flow text format:
//   c <comment>
//   p min <nodes> <arcs>
//   n <id> <supply>
//   a <tail> <head> <lower> <upper> <cost>
// Node ids are 1-based in the file and 0-based in memory.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "network.hpp"

namespace mcfipm {

namespace detail {

template <typename T>
T read_field(std::istringstream& in, std::size_t line, const char* what) {
  T value{};
  if (!(in >> value)) throw ParseError(line, std::string("expected ") + what);
  return value;
}

inline void expect_end(std::istringstream& in, std::size_t line) {
  std::string rest;
  if (in >> rest) throw ParseError(line, "trailing token '" + rest + "'");
}

}  // namespace detail

inline Network parse_dimacs(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n = 0;
  std::size_t m_declared = 0;
  std::vector<Arc> arcs;
  Vector supply;

  auto node_id = [&](long long id, std::size_t line) {
    if (id < 1 || static_cast<std::size_t>(id) > n)
      throw ParseError(line, "node id " + std::to_string(id) + " out of range");
    return static_cast<NodeId>(id - 1);
  };

  while (std::getline(in, text)) {
    ++line_no;
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "c") continue;
    if (tag == "p") {
      if (have_header) throw ParseError(line_no, "duplicate problem line");
      const auto kind = detail::read_field<std::string>(ls, line_no, "problem type");
      if (kind != "min") throw ParseError(line_no, "unsupported problem type '" + kind + "'");
      const auto nn = detail::read_field<long long>(ls, line_no, "node count");
      const auto mm = detail::read_field<long long>(ls, line_no, "arc count");
      detail::expect_end(ls, line_no);
      if (nn < 0 || mm < 0) throw ParseError(line_no, "negative size");
      n = static_cast<std::size_t>(nn);
      m_declared = static_cast<std::size_t>(mm);
      supply.assign(n, 0.0);
      arcs.reserve(m_declared);
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(line_no, "'" + tag + "' line before problem line");
    if (tag == "n") {
      const auto id = node_id(detail::read_field<long long>(ls, line_no, "node id"), line_no);
      const auto b = detail::read_field<double>(ls, line_no, "supply");
      detail::expect_end(ls, line_no);
      supply[static_cast<std::size_t>(id)] += b;
    } else if (tag == "a") {
      Arc a;
      a.tail = node_id(detail::read_field<long long>(ls, line_no, "tail"), line_no);
      a.head = node_id(detail::read_field<long long>(ls, line_no, "head"), line_no);
      a.lower = detail::read_field<double>(ls, line_no, "lower bound");
      a.upper = detail::read_field<double>(ls, line_no, "upper bound");
      a.cost = detail::read_field<double>(ls, line_no, "cost");
      detail::expect_end(ls, line_no);
      arcs.push_back(a);
    } else {
      throw ParseError(line_no, "unknown line type '" + tag + "'");
    }
  }
  if (!have_header) throw ParseError(line_no, "missing problem line");
  if (arcs.size() != m_declared)
    throw ValidationError("header declares " + std::to_string(m_declared) + " arcs, found " +
                          std::to_string(arcs.size()));
  return Network(n, std::move(arcs), std::move(supply));
}

inline Network parse_dimacs_string(const std::string& text) {
  std::istringstream in(text);
  return parse_dimacs(in);
}

inline void write_dimacs(std::ostream& out, const Network& net, const std::string& comment = {}) {
  out.precision(17);
  if (!comment.empty()) out << "c " << comment << '\n';
  out << "p min " << net.num_nodes() << ' ' << net.num_arcs() << '\n';
  for (std::size_t i = 0; i < net.num_nodes(); ++i)
    if (net.supply()[i] != 0.0) out << "n " << i + 1 << ' ' << net.supply()[i] << '\n';
  for (const Arc& a : net.arcs())
    out << "a " << a.tail + 1 << ' ' << a.head + 1 << ' ' << a.lower << ' ' << a.upper << ' '
        << a.cost << '\n';
}

inline std::string to_dimacs_string(const Network& net) {
  std::ostringstream out;
  write_dimacs(out, net);
  return out.str();
}

}  // namespace mcfipm
