#pragma once

// Benchmark harness: runs the solver (and optionally the exact oracle) over a
// family of generated instances and derives weak-scaling efficiency and the
// empirical complexity exponent.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "generators.hpp"
#include "ipm.hpp"
#include "network.hpp"
#include "oracle.hpp"

namespace mcfipm {

struct BenchRecord {
  std::string family;
  std::string instance;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t cores = 1;
  double time = 0.0;  ///< wall seconds for the interior-point solve
  std::size_t newton = 0;
  std::size_t krylov = 0;
  double cost = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> oracle_cost;
  std::optional<double> oracle_time;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

/// Weak-scaling efficiency in percent relative to records[0]:
/// 100 (m_k/m_0)^1.5 (cores_0/cores_k) (time_0/time_k).
inline std::vector<double> efficiency(const std::vector<BenchRecord>& records) {
  if (records.empty()) return {};
  const BenchRecord& base = records.front();
  if (!(base.time > 0.0)) throw ValidationError("efficiency: baseline time must be positive");
  if (base.m == 0 || base.cores == 0) throw ValidationError("efficiency: baseline needs m > 0 and cores > 0");
  std::vector<double> eta;
  eta.reserve(records.size());
  for (const BenchRecord& r : records) {
    if (!(r.time > 0.0) || r.cores == 0) throw ValidationError("efficiency: record " + r.instance + " has no valid time");
    const double ratio = static_cast<double>(r.m) / static_cast<double>(base.m);
    eta.push_back(100.0 * std::pow(ratio, 1.5) * (static_cast<double>(base.cores) / static_cast<double>(r.cores)) *
                  (base.time / r.time));
  }
  return eta;
}

/// Least-squares slope of log(time) against log(m).
inline double fit_exponent(const std::vector<BenchRecord>& records) {
  std::set<std::size_t> distinct;
  for (const auto& r : records) {
    if (!(r.time > 0.0) || r.m == 0) throw ValidationError("fit_exponent: times and sizes must be positive");
    distinct.insert(r.m);
  }
  if (distinct.size() < 3) throw ValidationError("fit_exponent: need at least 3 distinct arc counts");
  double sx = 0, sy = 0;
  for (const auto& r : records) {
    sx += std::log(static_cast<double>(r.m));
    sy += std::log(r.time);
  }
  const double k = static_cast<double>(records.size());
  const double mx = sx / k, my = sy / k;
  double sxy = 0, sxx = 0;
  for (const auto& r : records) {
    const double dx = std::log(static_cast<double>(r.m)) - mx;
    sxy += dx * (std::log(r.time) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// "grid" sizes are the side length of a square grid, "random" sizes the node count.
inline Network make_instance(const std::string& family, std::size_t size, std::uint64_t seed) {
  if (family == "grid") return gen_grid(size, size, seed);
  if (family == "random") return gen_random_sparse(size, seed);
  throw ValidationError("unknown instance family '" + family + "' (expected grid or random)");
}

struct BenchOptions {
  std::uint64_t seed = 1;
  std::size_t parallel = 1;
  bool oracle = true;
  SolverConfig solver;
};

inline BenchRecord run_instance(const std::string& family, std::size_t size, const BenchOptions& opt) {
  using clock = std::chrono::steady_clock;
  BenchRecord rec;
  rec.family = family;
  rec.instance = family + "-" + std::to_string(size) + "-s" + std::to_string(opt.seed);
  const Network net = make_instance(family, size, opt.seed);
  rec.n = net.num_nodes();
  rec.m = net.num_arcs();
  rec.cores = 1;  // every solve runs on a single thread
  const auto t0 = clock::now();
  try {
    const SolveResult res = solve(net, opt.solver);
    rec.cost = res.cost;
    rec.newton = res.newton_iterations;
    rec.krylov = res.krylov_iterations;
  } catch (const std::exception& e) {
    rec.status = std::string("failed: ") + e.what();
  }
  rec.time = std::chrono::duration<double>(clock::now() - t0).count();
  if (opt.oracle) {
    const auto t1 = clock::now();
    const FlowSolution sol = ssp_solve(net);
    rec.oracle_time = std::chrono::duration<double>(clock::now() - t1).count();
    if (sol.status == FlowStatus::optimal) rec.oracle_cost = sol.cost;
  }
  return rec;
}

/// Runs one record per size, in the order given. With parallel > 1 the
/// instances are distributed over that many worker threads.
inline std::vector<BenchRecord> run_bench(const std::string& family, const std::vector<std::size_t>& sizes,
                                          const BenchOptions& opt) {
  std::vector<BenchRecord> out(sizes.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < sizes.size();) {
      try {
        out[i] = run_instance(family, sizes[i], opt);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(opt.parallel, 1, std::max<std::size_t>(sizes.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

inline constexpr const char* bench_csv_header =
    "family,instance,n,m,cores,time_s,newton,krylov,cost,oracle_cost,oracle_time_s,rel_error,efficiency,alpha,status";

/// CSV with a fixed column order. Efficiency and alpha are left empty when
/// they cannot be computed (failed baseline, fewer than 3 distinct sizes).
inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  std::vector<double> eta;
  try {
    eta = efficiency(records);
  } catch (const ValidationError&) {
  }
  std::optional<double> alpha;
  try {
    alpha = fit_exponent(records);
  } catch (const ValidationError&) {
  }
  auto num = [](double v) {
    if (!std::isfinite(v)) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  auto quoted = [](std::string s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  os << bench_csv_header << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const BenchRecord& r = records[i];
    double rel = std::numeric_limits<double>::quiet_NaN();
    if (r.oracle_cost && r.ok()) rel = std::abs(r.cost - *r.oracle_cost) / std::max(1.0, std::abs(*r.oracle_cost));
    os << r.family << ',' << r.instance << ',' << r.n << ',' << r.m << ',' << r.cores << ',' << num(r.time) << ','
       << r.newton << ',' << r.krylov << ',' << num(r.cost) << ',' << (r.oracle_cost ? num(*r.oracle_cost) : "")
       << ',' << (r.oracle_time ? num(*r.oracle_time) : "") << ',' << num(rel) << ','
       << (i < eta.size() ? num(eta[i]) : "") << ',' << (alpha ? num(*alpha) : "") << ',' << quoted(r.status)
       << '\n';
  }
}

}  // namespace mcfipm
