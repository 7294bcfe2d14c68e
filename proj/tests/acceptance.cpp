// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

using namespace mcfipm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const Verdict& v) {
  std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
  std::fflush(stdout);
  failures += v.pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// shared by the optimality and KKT criteria
struct OptimalityStats {
  int instances = 0;
  int solved = 0;
  int cost_ok = 0;
  int bounds_ok = 0;
  int balance_ok = 0;
  int kkt_ok = 0;
  double worst_cost = 0.0;
  double worst_bound = 0.0;
  double worst_balance = 0.0;
  double worst_fx = 0.0;
  double worst_fy = 0.0;
  double worst_mu = 0.0;
  double seconds = 0.0;
  std::vector<std::string> errors;
};

void check_instance(const Network& net, const std::string& name, OptimalityStats& st) {
  ++st.instances;
  const FlowSolution ref = ssp_solve(net);
  SolveResult res;
  try {
    res = solve(net, SolverConfig{});
  } catch (const std::exception& e) {
    st.errors.push_back(name + ": " + e.what());
    return;
  }
  ++st.solved;
  const double rel = std::abs(res.cost - ref.cost) / std::max(1.0, std::abs(ref.cost));
  st.worst_cost = std::max(st.worst_cost, rel);
  st.cost_ok += ref.status == FlowStatus::optimal && rel <= 1e-6;

  double viol = 0.0;
  for (std::size_t j = 0; j < net.num_arcs(); ++j)
    viol = std::max({viol, net.arc(j).lower - res.x[j], res.x[j] - net.arc(j).upper});
  st.worst_bound = std::max(st.worst_bound, viol);
  st.bounds_ok += viol <= 1e-8;

  const Vector ax = net.divergence(res.x);
  double bal = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) bal = std::max(bal, std::abs(ax[i] - net.supply()[i]));
  bal /= 1.0 + blas::norm_inf(net.supply());
  st.worst_balance = std::max(st.worst_balance, bal);
  st.balance_ok += bal <= 1e-6;

  st.worst_fx = std::max(st.worst_fx, res.rel_fx);
  st.worst_fy = std::max(st.worst_fy, res.rel_fy);
  st.worst_mu = std::max(st.worst_mu, res.complementarity);
  st.kkt_ok += res.rel_fx <= 1e-8 && res.rel_fy <= 1e-8 && res.complementarity <= 1e-8;
}

OptimalityStats run_optimality() {
  OptimalityStats st;
  const auto t0 = Clock::now();
  const std::size_t sides[] = {8, 16, 24, 32, 48, 64};
  const std::size_t nodes[] = {64, 128, 256, 512, 1024, 2048, 4096};
  for (std::uint64_t k = 0; k < 50; ++k) {
    const std::size_t side = sides[k % std::size(sides)];
    check_instance(gen_grid(side, side, 1000 + k), "grid-" + std::to_string(side), st);
  }
  for (std::uint64_t k = 0; k < 50; ++k) {
    const std::size_t n = nodes[k % std::size(nodes)];
    check_instance(gen_random_sparse(n, 2000 + k), "random-" + std::to_string(n), st);
  }
  st.seconds = seconds_since(t0);
  return st;
}

Verdict optimality(const OptimalityStats& st) {
  const bool pass = st.solved == st.instances && st.cost_ok == st.instances && st.bounds_ok == st.instances &&
                    st.balance_ok == st.instances && st.seconds <= 300.0;
  std::string d = std::to_string(st.cost_ok) + "/" + std::to_string(st.instances) + " costs match SSP (worst rel " +
                  fmt("%.2e", st.worst_cost) + "), bound violation " + fmt("%.2e", st.worst_bound) +
                  ", balance " + fmt("%.2e", st.worst_balance) + ", " + fmt("%.1f", st.seconds) + " s";
  if (!st.errors.empty()) d += "; first error: " + st.errors.front();
  return {pass, d};
}

Verdict kkt(const OptimalityStats& st) {
  const bool pass = st.solved > 0 && st.kkt_ok == st.solved;
  return {pass, std::to_string(st.kkt_ok) + "/" + std::to_string(st.solved) + " solves with max scaled f_x " +
                    fmt("%.2e", st.worst_fx) + ", f_y " + fmt("%.2e", st.worst_fy) + ", mu " +
                    fmt("%.2e", st.worst_mu)};
}

std::vector<double> step_counts(const SolveResult& r) {
  std::vector<double> v;
  for (const auto& rec : r.history) v.push_back(static_cast<double>(rec.krylov_predictor + rec.krylov_corrector));
  return v;
}

Verdict ablation() {
  int degraded = 0;
  int stable = 0;
  double worst_ratio = 0.0;
  std::string notes;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Network net = gen_grid(32, 32, seed);
    const SolveResult reg = solve(net, SolverConfig{});
    const std::vector<double> counts = step_counts(reg);
    const double med = median(counts);
    const double ratio = *std::max_element(counts.begin(), counts.end()) / med;
    worst_ratio = std::max(worst_ratio, ratio);
    stable += ratio <= 3.0;

    SolverConfig bare;
    bare.regularization = false;
    bare.active_set = false;
    try {
      const SolveResult r = solve(net, bare);
      const std::vector<double> c = step_counts(r);
      const std::size_t from = c.size() > 5 ? c.size() - 5 : 0;
      const double tail = *std::max_element(c.begin() + static_cast<std::ptrdiff_t>(from), c.end());
      const bool blown = tail > 10.0 * med;
      degraded += blown;
      notes += " s" + std::to_string(seed) + (blown ? ":blown" : ":ok") + fmt("(%.0f", tail) + fmt("/%.0f)", med);
    } catch (const SolverError&) {
      ++degraded;
      notes += " s" + std::to_string(seed) + ":error";
    }
  }
  const bool pass = degraded >= 8 && stable == 10;
  return {pass, "unregularized degraded or failed on " + std::to_string(degraded) +
                    "/10 grids (need 8); regularized per-step max/median " + fmt("%.2f", worst_ratio) + " on " +
                    std::to_string(stable) + "/10 within 3x;" + notes};
}

Verdict mesh_independence() {
  std::vector<std::size_t> its;
  std::string d;
  for (std::size_t k : {16u, 32u, 64u, 128u}) {
    const SparseMatrix l = testing_support::pinned_grid_laplacian(k);
    const AmgHierarchy h = build_hierarchy(l);
    SplitMix64 rng(k);
    Vector b(l.rows());
    for (auto& v : b) v = rng.uniform01() - 0.5;
    b.back() = 0.0;  // pinned node
    const KrylovResult r = cg(matrix_operator(l), amg_preconditioner(h), b, 1e-8, 500);
    its.push_back(r.stats.converged ? r.stats.iterations : 100000);
    d += (d.empty() ? "" : ", ") + std::to_string(k) + "^2: " + std::to_string(r.stats.iterations);
  }
  const double spread = static_cast<double>(*std::max_element(its.begin(), its.end())) /
                        static_cast<double>(*std::min_element(its.begin(), its.end()));
  return {spread <= 2.0, "PCG iterations " + d + " (max/min " + fmt("%.2f", spread) + ")"};
}

Verdict complexity() {
  const auto t0 = Clock::now();
  BenchOptions opt;
  opt.oracle = false;
  const auto records = run_bench("grid", {45, 90, 180, 354}, opt);
  const double total = seconds_since(t0);
  std::string d;
  bool ok = true;
  for (const auto& r : records) {
    ok = ok && r.ok();
    d += " m=" + std::to_string(r.m) + ":" + fmt("%.2fs", r.time);
    if (!r.ok()) d += "(" + r.status + ")";
  }
  if (!ok) return {false, "solve failed:" + d};
  const double alpha = fit_exponent(records);
  return {alpha <= 1.40 && total <= 900.0,
          "alpha " + fmt("%.3f", alpha) + " in " + fmt("%.1f", total) + " s;" + d};
}

Verdict pinning() {
  SplitMix64 rng(6006);
  int agree = 0, spd = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform(2, 64));
    const std::size_t m = static_cast<std::size_t>(rng.uniform(1, static_cast<std::int64_t>(3 * n)));
    const Network net = testing_support::random_small_network(rng, n, m, 5, 0, 5);
    ActiveSet active(m);
    const double p = rng.uniform01();
    for (std::size_t j = 0; j < m; ++j) {
      if (rng.uniform01() >= p) continue;
      if (rng.uniform01() < 0.5)
        active.set_lower(j, true);
      else
        active.set_upper(j, true);
    }
    Metric metric = Metric::unit(m);
    for (auto& w : metric.dtilde) w = std::pow(10.0, 6.0 * rng.uniform01() - 3.0);
    const SchurOperator op = pin_components(assemble_schur(net, metric, active));
    agree += op.labels == testing_support::union_find_labels(net, active);
    spd += testing_support::is_positive_definite(op.laplacian.to_dense());
  }
  return {agree == 200 && spd == 200,
          "labels match union-find on " + std::to_string(agree) + "/200, pinned Laplacian SPD on " +
              std::to_string(spd) + "/200"};
}

Verdict adaptive_time_step() {
  SplitMix64 rng(7007);
  int match = 0;
  for (int t = 0; t < 10000; ++t) {
    SolverConfig cfg;
    cfg.rho = std::pow(10.0, -9.0 + 8.0 * rng.uniform01());
    cfg.eta = std::pow(10.0, -7.0 + 6.0 * rng.uniform01());
    double min_s = cfg.eta * 2.0 * rng.uniform01();
    if (t % 100 == 0) min_s = cfg.eta;
    const auto [dt, beta] = adaptive_dt(min_s, cfg);
    double edt = 1.0, ebeta = 0.0;
    if (min_s < cfg.eta) {
      edt = std::sqrt(cfg.rho / (cfg.eta - min_s));
      ebeta = 1.0;
    } else if (min_s == cfg.eta) {
      ebeta = 1.0;
    }
    match += dt == edt && beta == ebeta;
  }
  SolverConfig cfg;
  cfg.rho = 1e-6;
  cfg.eta = 1e-4;
  const auto [dt, beta] = adaptive_dt(0.0, cfg);
  const bool example = std::abs(dt - 0.1) <= 1e-15 && beta == 1.0;
  return {match == 10000 && example, std::to_string(match) + "/10000 triples match; (0, 1e-6, 1e-4) gives dt " +
                                         fmt("%.17g", dt) + ", beta " + fmt("%g", beta)};
}

Verdict efficiency_table() {
  std::vector<BenchRecord> rs;
  const double times[] = {12.7, 13.2, 19.4, 29.2};
  const std::size_t cores[] = {24, 48, 96, 192};
  for (std::size_t k = 0; k < 4; ++k) {
    BenchRecord r;
    r.m = 1000u << k;
    r.cores = cores[k];
    r.time = times[k];
    rs.push_back(r);
  }
  const auto eta = efficiency(rs);
  const double want[] = {100, 136, 131, 123};
  bool ok = true;
  std::string d;
  for (std::size_t k = 0; k < 4; ++k) {
    ok = ok && std::abs(eta[k] - want[k]) <= 1.0;
    d += (k ? " " : "") + fmt("%.1f", eta[k]);
  }
  return {ok, "efficiencies " + d + " (expected 100 136 131 123)"};
}

}  // namespace

int main() {
  const OptimalityStats opt = run_optimality();
  report("optimality", optimality(opt));
  report("kkt", kkt(opt));
  report("ablation", ablation());
  report("mesh_independence", mesh_independence());
  report("complexity", complexity());
  report("pinning", pinning());
  report("adaptive_time_step", adaptive_time_step());
  report("efficiency", efficiency_table());
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
