#pragma once

// Command-line front end. Kept in a header so tests can drive it with
// arbitrary argument vectors and capture its output.
//
// Exit codes: 0 success, 1 solver failure, 2 usage or input error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bench.hpp"
#include "diagnostics.hpp"
#include "dimacs.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "ipm.hpp"
#include "oracle.hpp"
#include "schur.hpp"

namespace mcfipm {

inline constexpr int exit_ok = 0;
inline constexpr int exit_solver_failure = 1;
inline constexpr int exit_usage = 2;

namespace cli_detail {

inline Network read_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return parse_dimacs(in);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct SolveArgs {
  std::string file;
  SolverConfig cfg;
  double krylov_tol = NewtonSolveOptions{}.krylov_tol;
  std::size_t krylov_maxit = NewtonSolveOptions{}.krylov_maxit;
  std::string method = "cg";
  bool no_regularization = false;
  bool no_active_set = false;
  bool check_oracle = false;
  std::string diag;
  std::string dump_matrix;
};

inline void add_solver_flags(CLI::App* cmd, SolveArgs& a) {
  cmd->add_option("--rho", a.cfg.rho, "mass density of the regularization")->capture_default_str();
  cmd->add_option("--eta", a.cfg.eta, "time-step threshold on min(s)")->capture_default_str();
  cmd->add_option("--eps-x", a.cfg.eps_x, "activation tolerance")->capture_default_str();
  cmd->add_option("--eps-s", a.cfg.eps_s, "deactivation tolerance")->capture_default_str();
  cmd->add_option("--tol", a.cfg.tol, "termination tolerance on scaled residuals")->capture_default_str();
  cmd->add_option("--krylov-tol", a.krylov_tol, "relative residual for the inner solver")->capture_default_str();
  cmd->add_option("--krylov-maxit", a.krylov_maxit, "iteration cap for the inner solver")->capture_default_str();
  cmd->add_option("--max-newton", a.cfg.max_newton, "Newton iteration cap")->capture_default_str();
  cmd->add_flag("--no-regularization", a.no_regularization, "disable the mass regularization");
  cmd->add_flag("--no-active-set", a.no_active_set, "never fix constraints at their bounds");
  cmd->add_option("--solver", a.method, "inner Krylov method")
      ->check(CLI::IsMember({"cg", "bicgstab"}))
      ->capture_default_str();
}

inline void finalize(SolveArgs& a) {
  a.cfg.regularization = !a.no_regularization;
  a.cfg.active_set = !a.no_active_set;
  a.cfg.krylov.krylov_tol = a.krylov_tol;
  a.cfg.krylov.krylov_maxit = a.krylov_maxit;
  a.cfg.krylov.method = a.method == "bicgstab" ? KrylovMethod::bicgstab : KrylovMethod::cg;
}

inline int run_solve(SolveArgs a, std::ostream& out, std::ostream& err) {
  finalize(a);
  const Network net = read_network(a.file);
  std::optional<FlowSolution> oracle;
  if (a.check_oracle) {
    oracle = ssp_solve(net);
    if (oracle->status != FlowStatus::optimal) {
      err << "error: oracle reports the instance infeasible\n";
      return exit_solver_failure;
    }
  }
  std::unique_ptr<JsonlWriter> diag;
  if (!a.diag.empty()) diag = std::make_unique<JsonlWriter>(a.diag);
  SchurNewtonSolver linsolve(a.cfg.krylov, a.cfg.amg);
  auto dump = [&] {
    if (a.dump_matrix.empty()) return;
    std::ofstream mtx(a.dump_matrix);
    write_matrix_market(mtx, linsolve.schur_operator().laplacian);
  };
  auto on_iter = [&](const IterationRecord& r) {
    if (!diag) return;
    IterationRecord rec = r;
    if (oracle) rec.relative_error = std::abs(rec.cost - oracle->cost) / std::max(1.0, std::abs(oracle->cost));
    diag->write(rec);
  };
  SolveResult res;
  try {
    res = solve(net, a.cfg, on_iter, &linsolve);
  } catch (const KrylovError& e) {
    dump();
    err << "error: " << e.what() << '\n';
    const auto& h = e.history();
    if (!h.empty()) {
      err << "krylov residual history (last entries):";
      for (std::size_t i = h.size() > 10 ? h.size() - 10 : 0; i < h.size(); ++i) err << ' ' << fmt(h[i]);
      err << '\n';
    }
    return exit_solver_failure;
  } catch (const NonConvergenceError& e) {
    dump();
    err << "error: " << e.what() << "\nstate: " << e.state_dump() << '\n';
    return exit_solver_failure;
  } catch (const SolverError& e) {
    dump();
    err << "error: " << e.what() << '\n';
    return exit_solver_failure;
  }
  dump();
  out << "status: optimal\n"
      << "cost: " << fmt(res.cost) << '\n'
      << "newton_iterations: " << res.newton_iterations << '\n'
      << "krylov_iterations: " << res.krylov_iterations << '\n'
      << "rel_fx: " << fmt(res.rel_fx) << '\n'
      << "rel_fy: " << fmt(res.rel_fy) << '\n'
      << "complementarity: " << fmt(res.complementarity) << '\n';
  if (oracle) {
    const double rel = std::abs(res.cost - oracle->cost) / std::max(1.0, std::abs(oracle->cost));
    const bool match = rel <= 1e-6;
    out << "oracle_cost: " << fmt(oracle->cost) << '\n'
        << "oracle_relative_error: " << fmt(rel) << '\n'
        << "oracle_match: " << (match ? "yes" : "no") << '\n';
    if (!match) return exit_solver_failure;
  }
  return exit_ok;
}

inline void write_network(const Network& net, const std::string& path, const std::string& comment,
                          std::ostream& out) {
  if (path.empty() || path == "-") {
    write_dimacs(out, net, comment);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  write_dimacs(f, net, comment);
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Interior-point min-cost-flow solver with AMG-preconditioned Schur complements"};
  app.name("mcfipm");
  app.require_subcommand(1);

  cli_detail::SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve a DIMACS min-cost-flow instance");
  solve_cmd->add_option("file", solve_args.file, "DIMACS input")->required();
  cli_detail::add_solver_flags(solve_cmd, solve_args);
  solve_cmd->add_flag("--check-oracle", solve_args.check_oracle, "compare against the exact SSP solver");
  solve_cmd->add_option("--diag", solve_args.diag, "write per-iteration diagnostics as JSON lines");
  solve_cmd->add_option("--dump-matrix", solve_args.dump_matrix,
                        "write the last pinned Schur matrix in MatrixMarket format");

  auto* gen_cmd = app.add_subcommand("gen", "generate an instance");
  gen_cmd->require_subcommand(1);
  std::size_t rows = 8, cols = 8, nodes = 64;
  std::uint64_t seed = 1;
  std::string output;
  auto* grid_cmd = gen_cmd->add_subcommand("grid", "bidirected grid");
  grid_cmd->add_option("--rows", rows)->capture_default_str();
  grid_cmd->add_option("--cols", cols)->capture_default_str();
  grid_cmd->add_option("--seed", seed)->capture_default_str();
  grid_cmd->add_option("-o,--output", output, "output path (stdout if omitted)");
  auto* random_cmd = gen_cmd->add_subcommand("random", "random sparse graph with about 8n arcs");
  random_cmd->add_option("--n", nodes)->capture_default_str();
  random_cmd->add_option("--seed", seed)->capture_default_str();
  random_cmd->add_option("-o,--output", output, "output path (stdout if omitted)");

  std::string family;
  std::vector<std::size_t> sizes;
  std::string csv_path;
  BenchOptions bench_opt;
  bool no_oracle = false;
  cli_detail::SolveArgs bench_solver;
  auto* bench_cmd = app.add_subcommand("bench", "time a family of generated instances");
  bench_cmd->add_option("family", family, "grid (size = side length) or random (size = node count)")
      ->required()
      ->check(CLI::IsMember({"grid", "random"}));
  bench_cmd->add_option("--sizes", sizes, "instance sizes")->required()->expected(1, -1);
  bench_cmd->add_option("--out", csv_path, "CSV output path")->required();
  bench_cmd->add_option("--seed", bench_opt.seed)->capture_default_str();
  bench_cmd->add_option("--parallel", bench_opt.parallel, "instances solved concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_flag("--no-oracle", no_oracle, "skip the SSP reference solve");
  cli_detail::add_solver_flags(bench_cmd, bench_solver);

  std::string comp_file;
  auto* comp_cmd = app.add_subcommand("components", "print weakly connected component labels");
  comp_cmd->add_option("file", comp_file, "DIMACS input")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*solve_cmd) return cli_detail::run_solve(solve_args, out, err);

    if (*grid_cmd) {
      const Network net = gen_grid(rows, cols, seed);
      cli_detail::write_network(net, output,
                                "grid " + std::to_string(rows) + "x" + std::to_string(cols) + " seed " +
                                    std::to_string(seed),
                                out);
      return exit_ok;
    }
    if (*random_cmd) {
      const Network net = gen_random_sparse(nodes, seed);
      cli_detail::write_network(net, output,
                                "random n=" + std::to_string(nodes) + " seed " + std::to_string(seed), out);
      return exit_ok;
    }

    if (*bench_cmd) {
      cli_detail::finalize(bench_solver);
      bench_opt.solver = bench_solver.cfg;
      bench_opt.oracle = !no_oracle;
      const auto records = run_bench(family, sizes, bench_opt);
      std::ofstream csv(csv_path);
      if (!csv) throw ValidationError("cannot write " + csv_path);
      write_bench_csv(csv, records);
      std::vector<double> eta;
      try {
        eta = efficiency(records);
      } catch (const ValidationError&) {
      }
      bool all_ok = true;
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        all_ok = all_ok && r.ok();
        out << r.instance << "  m=" << r.m << "  time=" << cli_detail::fmt(r.time) << "s  newton=" << r.newton
            << "  krylov=" << r.krylov;
        if (i < eta.size()) out << "  efficiency=" << cli_detail::fmt(eta[i]);
        if (!r.ok()) out << "  " << r.status;
        out << '\n';
      }
      try {
        out << "alpha: " << cli_detail::fmt(fit_exponent(records)) << '\n';
      } catch (const ValidationError& e) {
        out << "alpha: n/a (" << e.what() << ")\n";
      }
      return all_ok ? exit_ok : exit_solver_failure;
    }

    if (*comp_cmd) {
      const Network net = cli_detail::read_network(comp_file);
      const auto labels = connected_components_labelprop(net, ActiveSet{});
      std::size_t count = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) count += labels[i] == static_cast<Index>(i);
      out << "components: " << count << '\n';
      for (std::size_t i = 0; i < labels.size(); ++i) out << i + 1 << ' ' << labels[i] + 1 << '\n';
      return exit_ok;
    }
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return exit_solver_failure;
  } catch (const std::exception& e) {
    // parse, validation and unsupported-input errors all stem from the input
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

}  // namespace mcfipm
