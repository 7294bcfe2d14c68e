#pragma once

// Primal-dual interior-point method for min-cost flow with Mehrotra
// predictor-corrector steps, pseudo-dynamic (mass) regularization of the
// Newton matrix and an active set that pins arcs onto their bounds.
//
// Constraint vector g(x) = (x - lower; upper - x) has 2m entries; s holds the
// matching multipliers in the same order.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "active_set.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "schur.hpp"

namespace mcfipm {

struct SolverConfig {
  double rho = 1e-6;       ///< mass density, M = rho I
  double eta = 1e-4;       ///< adaptive time-step threshold on min(s)
  double eps_x = 1e-6;     ///< activation tolerance on g
  double eps_s = 1e-8;     ///< deactivation tolerance on s/g
  double tau = 0.995;      ///< fraction to the boundary
  double tol = 1e-8;       ///< termination tolerance on scaled residuals
  std::size_t max_newton = 200;
  double mu0 = 1.0;
  double activation_mu = 1e-4;  ///< active-set updates only once mu drops below this
  bool regularization = true;
  bool active_set = true;
  NewtonSolveOptions krylov;
  AmgOptions amg;
};

struct IpmState {
  Vector x;
  Vector x_prev;
  Vector y;
  Vector s;  ///< 2m entries: lower-bound multipliers, then upper-bound multipliers
  double mu = 1.0;
  double dt = 1.0;
  double beta = 0.0;
  std::size_t iter = 0;
  ActiveSet active;
};

struct Residuals {
  Vector f_x;
  Vector f_y;
  Vector f_s;
};

/// g(x) = (x - lower; upper - x)
inline Vector constraint_slacks(const Network& net, std::span<const double> x) {
  const std::size_t m = net.num_arcs();
  Vector g(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    g[j] = x[j] - net.arc(j).lower;
    g[m + j] = net.arc(j).upper - x[j];
  }
  return g;
}

/// Whether constraint i (0..2m) is held by the active set.
inline bool constraint_active(const ActiveSet& active, std::size_t i, std::size_t m) {
  return i < m ? active.lower(i) : active.upper(i - m);
}

/// f_x = c - A^T y - (s_lower - s_upper), f_y = b - A x,
/// f_s = sigma_mu - g s (zero on active constraints).
inline Residuals kkt_residuals(const IpmState& st, const Network& net, double sigma_mu) {
  const std::size_t m = net.num_arcs();
  Residuals r;
  r.f_x.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Arc& a = net.arc(j);
    r.f_x[j] = a.cost - (st.y[static_cast<std::size_t>(a.tail)] - st.y[static_cast<std::size_t>(a.head)]) - st.s[j] +
               st.s[m + j];
  }
  r.f_y = net.supply();
  const Vector ax = net.divergence(st.x);
  for (std::size_t i = 0; i < r.f_y.size(); ++i) r.f_y[i] -= ax[i];
  const Vector g = constraint_slacks(net, st.x);
  r.f_s.resize(2 * m);
  for (std::size_t i = 0; i < 2 * m; ++i)
    r.f_s[i] = constraint_active(st.active, i, m) ? 0.0 : sigma_mu - g[i] * st.s[i];
  return r;
}

/// Explicit inertial step x + dt v - dt^2 (c / rho + beta v) with
/// v = (x - x_prev) / dt.
inline Vector unconstrained_step(const IpmState& st, const Network& net, const SolverConfig& cfg) {
  const std::size_t m = net.num_arcs();
  Vector x0(m);
  const double dt = st.dt;
  for (std::size_t j = 0; j < m; ++j) {
    const double v = (st.x[j] - st.x_prev[j]) / dt;
    x0[j] = st.x[j] + dt * v - dt * dt * (net.arc(j).cost / cfg.rho + st.beta * v);
  }
  return x0;
}

/// Time step and damping from the smallest multiplier:
/// min(s) < eta gives dt = sqrt(rho / (eta - min(s))), beta = 1;
/// min(s) > eta gives dt = 1, beta = 0; min(s) == eta gives dt = 1, beta = 1.
inline std::pair<double, double> adaptive_dt(double min_s, const SolverConfig& cfg) {
  if (min_s < cfg.eta) return {std::sqrt(cfg.rho / (cfg.eta - min_s)), 1.0};
  if (min_s == cfg.eta) return {1.0, 1.0};
  return {1.0, 0.0};
}

inline double min_inactive_multiplier(const IpmState& st) {
  double mn = std::numeric_limits<double>::infinity();
  const std::size_t m = st.s.size() / 2;
  for (std::size_t i = 0; i < st.s.size(); ++i)
    if (!constraint_active(st.active, i, m)) mn = std::min(mn, st.s[i]);
  return mn;
}

inline std::pair<double, double> adaptive_dt(const IpmState& st, const SolverConfig& cfg) {
  return adaptive_dt(min_inactive_multiplier(st), cfg);
}

/// Fraction-to-boundary step lengths over the inactive constraints:
/// alpha = min(1, tau * largest step keeping g >= 0 resp. s >= 0).
inline std::pair<double, double> line_search(const IpmState& st, const Network& net, std::span<const double> dx,
                                             std::span<const double> ds, const SolverConfig& cfg) {
  const std::size_t m = net.num_arcs();
  const Vector g = constraint_slacks(net, st.x);
  double ax = std::numeric_limits<double>::infinity();
  double as = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 2 * m; ++i) {
    if (constraint_active(st.active, i, m)) continue;
    const double dg = i < m ? dx[i] : -dx[i - m];
    if (dg < 0.0) ax = std::min(ax, -g[i] / dg);
    if (ds[i] < 0.0) as = std::min(as, -st.s[i] / ds[i]);
  }
  return {std::min(1.0, cfg.tau * ax), std::min(1.0, cfg.tau * as)};
}

/// Activation (g_i <= eps_x) and deactivation (s_i / g_i <= eps_s) of bound
/// constraints. Constraints held at g = 0 use eps_x in place of g in the
/// deactivation ratio. If both bounds of an arc qualify, the one with the
/// smaller slack wins and ties go to the upper bound.
inline ActiveSet update_active_set(std::span<const double> g, std::span<const double> s, const ActiveSet& current,
                                   const SolverConfig& cfg) {
  const std::size_t m = current.size();
  ActiveSet next = current;
  for (std::size_t j = 0; j < m; ++j) {
    if (current.lower(j) && s[j] <= cfg.eps_s * std::max(g[j], cfg.eps_x)) next.set_lower(j, false);
    if (current.upper(j) && s[m + j] <= cfg.eps_s * std::max(g[m + j], cfg.eps_x)) next.set_upper(j, false);
    if (!current.is_free(j)) continue;
    const bool lo = g[j] <= cfg.eps_x;
    const bool up = g[m + j] <= cfg.eps_x;
    if (lo && up) {
      if (g[m + j] <= g[j])
        next.set_upper(j, true);
      else
        next.set_lower(j, true);
    } else if (lo) {
      next.set_lower(j, true);
    } else if (up) {
      next.set_upper(j, true);
    }
  }
  return next;
}

inline ActiveSet update_active_set(const IpmState& st, const Network& net, const SolverConfig& cfg) {
  return update_active_set(constraint_slacks(net, st.x), st.s, st.active, cfg);
}

/// Mean complementarity over inactive constraints.
inline double mean_complementarity(const IpmState& st, const Network& net) {
  const std::size_t m = net.num_arcs();
  const Vector g = constraint_slacks(net, st.x);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!constraint_active(st.active, i, m)) {
      sum += g[i] * st.s[i];
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

/// Mass term added to the metric diagonal.
inline double regularization_mass(const IpmState& st, const SolverConfig& cfg) {
  return cfg.regularization ? cfg.rho / (st.dt * st.dt) : 0.0;
}

/// Diagonal Dt = s_l / g_l + s_u / g_u + rho / dt^2 on free arcs; arcs with an
/// active bound get Dt = 1 and the step that lands them on the bound.
inline Metric build_metric(const IpmState& st, const Network& net, const SolverConfig& cfg) {
  const std::size_t m = net.num_arcs();
  const double mass = regularization_mass(st, cfg);
  Metric metric{Vector(m), std::vector<char>(m), Vector(m, 0.0)};
  for (std::size_t j = 0; j < m; ++j) {
    const Arc& a = net.arc(j);
    if (st.active.is_free(j)) {
      metric.free[j] = 1;
      metric.dtilde[j] = st.s[j] / (st.x[j] - a.lower) + st.s[m + j] / (a.upper - st.x[j]) + mass;
    } else {
      metric.free[j] = 0;
      metric.dtilde[j] = 1.0;
      metric.fixed_step[j] = (st.active.lower(j) ? a.lower : a.upper) - st.x[j];
    }
  }
  return metric;
}

/// Regularized stationarity residual (rho/dt^2)(x - x0) - A^T y - (s_l - s_u),
/// with x0 the unconstrained step. Equals f_x when regularization is off.
inline Vector regularized_fx(const IpmState& st, const Network& net, const SolverConfig& cfg,
                             std::span<const double> f_x) {
  if (!cfg.regularization) return Vector(f_x.begin(), f_x.end());
  const std::size_t m = net.num_arcs();
  const Vector x0 = unconstrained_step(st, net, cfg);
  const double mass = cfg.rho / (st.dt * st.dt);
  Vector out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = f_x[j] - net.arc(j).cost + mass * (st.x[j] - x0[j]);
  return out;
}

/// First block of the reduced right-hand side: -(f~_x - grad g^T G^{-1} f_s).
inline Vector newton_rx(const IpmState& st, const Network& net, std::span<const double> fx_tilde,
                        std::span<const double> f_s) {
  const std::size_t m = net.num_arcs();
  Vector rx(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (!st.active.is_free(j)) continue;
    const Arc& a = net.arc(j);
    rx[j] = -fx_tilde[j] + f_s[j] / (st.x[j] - a.lower) - f_s[m + j] / (a.upper - st.x[j]);
  }
  return rx;
}

/// ds = G^{-1} (f_s - S grad g dx) on inactive constraints, zero on active ones.
inline Vector recover_ds(const IpmState& st, const Network& net, std::span<const double> f_s,
                         std::span<const double> dx) {
  const std::size_t m = net.num_arcs();
  const Vector g = constraint_slacks(net, st.x);
  Vector ds(2 * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (!st.active.lower(j)) ds[j] = (f_s[j] - st.s[j] * dx[j]) / g[j];
    if (!st.active.upper(j)) ds[m + j] = (f_s[m + j] + st.s[m + j] * dx[j]) / g[m + j];
  }
  return ds;
}

/// Multipliers of active constraints from stationarity, so f_x vanishes on
/// active arcs.
inline void refresh_active_multipliers(IpmState& st, const Network& net) {
  const std::size_t m = net.num_arcs();
  for (std::size_t j = 0; j < m; ++j) {
    if (st.active.is_free(j)) continue;
    const Arc& a = net.arc(j);
    const double reduced = a.cost - (st.y[static_cast<std::size_t>(a.tail)] - st.y[static_cast<std::size_t>(a.head)]);
    if (st.active.lower(j))
      st.s[j] = reduced + st.s[m + j];
    else
      st.s[m + j] = st.s[j] - reduced;
  }
}

struct StepReport {
  std::size_t krylov_predictor = 0;
  std::size_t krylov_corrector = 0;
  double alpha_x = 0.0;
  double alpha_s = 0.0;
  double sigma = 0.0;
  double block_residual = 0.0;  ///< worst relative residual of the two block solves
};

struct MehrotraOutcome {
  IpmState state;
  StepReport report;
};

/// One predictor-corrector iteration. linsolve.prepare() is called once and
/// both solves share it.
inline MehrotraOutcome mehrotra_step(const IpmState& st, const Network& net, const SolverConfig& cfg,
                                     NewtonLinearSolver& linsolve) {
  const std::size_t m = net.num_arcs();
  const Metric metric = build_metric(st, net, cfg);
  linsolve.prepare(net, metric, st.active);
  StepReport report;

  // predictor
  const Residuals aff = kkt_residuals(st, net, 0.0);
  const Vector fx_tilde = regularized_fx(st, net, cfg, aff.f_x);
  const Vector rx_aff = newton_rx(st, net, fx_tilde, aff.f_s);
  NewtonStep pred = linsolve.solve(rx_aff, aff.f_y);
  report.krylov_predictor = pred.krylov.iterations;
  report.block_residual = block_residual(metric, net, pred.dx, pred.dy, rx_aff, aff.f_y);
  const Vector ds_aff = recover_ds(st, net, aff.f_s, pred.dx);
  const auto [ax_aff, as_aff] = line_search(st, net, pred.dx, ds_aff, cfg);

  const Vector g = constraint_slacks(net, st.x);
  double mu_aff = 0.0;
  std::size_t inactive = 0;
  for (std::size_t i = 0; i < 2 * m; ++i) {
    if (constraint_active(st.active, i, m)) continue;
    const double dg = i < m ? pred.dx[i] : -pred.dx[i - m];
    mu_aff += (g[i] + ax_aff * dg) * (st.s[i] + as_aff * ds_aff[i]);
    ++inactive;
  }
  mu_aff = inactive ? mu_aff / static_cast<double>(inactive) : 0.0;
  const double sigma = st.mu > 0.0 ? std::clamp(std::pow(mu_aff / st.mu, 3.0), 0.0, 1.0) : 0.0;
  report.sigma = sigma;

  // corrector
  Residuals cor = aff;
  for (std::size_t i = 0; i < 2 * m; ++i) {
    if (constraint_active(st.active, i, m)) continue;
    const double dg = i < m ? pred.dx[i] : -pred.dx[i - m];
    cor.f_s[i] = sigma * st.mu - g[i] * st.s[i] - dg * ds_aff[i];
  }
  const Vector rx = newton_rx(st, net, fx_tilde, cor.f_s);
  NewtonStep step = linsolve.solve(rx, cor.f_y);
  report.krylov_corrector = step.krylov.iterations;
  report.block_residual = std::max(report.block_residual, block_residual(metric, net, step.dx, step.dy, rx, cor.f_y));
  const Vector ds = recover_ds(st, net, cor.f_s, step.dx);
  const auto [ax, as] = line_search(st, net, step.dx, ds, cfg);
  report.alpha_x = ax;
  report.alpha_s = as;
  if (std::max(ax, as) < 1e-12)
    throw StallError("step length collapsed (alpha_x = " + std::to_string(ax) + ", alpha_s = " + std::to_string(as) +
                     ") at iteration " + std::to_string(st.iter));

  MehrotraOutcome out{st, report};
  IpmState& nx = out.state;
  nx.x_prev = st.x;
  for (std::size_t j = 0; j < m; ++j) nx.x[j] += ax * step.dx[j];
  for (std::size_t i = 0; i < nx.y.size(); ++i) nx.y[i] -= as * step.dy[i];
  for (std::size_t i = 0; i < 2 * m; ++i) nx.s[i] += as * ds[i];
  refresh_active_multipliers(nx, net);
  nx.mu = mean_complementarity(nx, net);
  ++nx.iter;
  return out;
}

/// Places newly active constraints exactly on their bound and gives released
/// ones a small interior gap with a centred multiplier.
inline void apply_active_set(IpmState& st, const Network& net, const ActiveSet& next, const SolverConfig& cfg) {
  const std::size_t m = net.num_arcs();
  const double mu = std::max(st.mu, std::numeric_limits<double>::min());
  for (std::size_t j = 0; j < m; ++j) {
    const Arc& a = net.arc(j);
    if (next.lower(j) && !st.active.lower(j)) st.x[j] = a.lower;
    if (next.upper(j) && !st.active.upper(j)) st.x[j] = a.upper;
    const double gap = std::min(0.5 * (a.upper - a.lower), 100.0 * cfg.eps_x);
    if (st.active.lower(j) && !next.lower(j) && next.is_free(j)) {
      st.x[j] = a.lower + gap;
      st.s[j] = mu / gap;
    }
    if (st.active.upper(j) && !next.upper(j) && next.is_free(j)) {
      st.x[j] = a.upper - gap;
      st.s[m + j] = mu / gap;
    }
  }
  st.active = next;
  refresh_active_multipliers(st, net);
}

/// Interior starting point: x at the midpoint of its bounds, y = 0,
/// s_i = max(1, mu0 / g_i).
inline IpmState initial_state(const Network& net, const SolverConfig& cfg) {
  const std::size_t m = net.num_arcs();
  IpmState st;
  st.x.resize(m);
  for (std::size_t j = 0; j < m; ++j) st.x[j] = 0.5 * (net.arc(j).lower + net.arc(j).upper);
  st.x_prev = st.x;
  st.y.assign(net.num_nodes(), 0.0);
  const Vector g = constraint_slacks(net, st.x);
  st.s.resize(2 * m);
  for (std::size_t i = 0; i < 2 * m; ++i) st.s[i] = std::max(1.0, cfg.mu0 / g[i]);
  st.active = ActiveSet(m);
  st.mu = mean_complementarity(st, net);
  return st;
}

struct IterationRecord {
  std::size_t iter = 0;
  double mu = 0.0;
  double rel_fx = 0.0;
  double rel_fy = 0.0;
  std::size_t krylov_predictor = 0;
  std::size_t krylov_corrector = 0;
  std::size_t lower_active = 0;
  std::size_t upper_active = 0;
  double active_fraction = 0.0;
  double dt = 1.0;
  double beta = 0.0;
  double alpha_x = 0.0;
  double alpha_s = 0.0;
  double sigma = 0.0;
  double block_residual = 0.0;
  std::size_t components = 0;
  std::size_t amg_levels = 0;
  double operator_complexity = 1.0;
  std::vector<std::size_t> level_sizes;
  double cost = 0.0;  ///< objective of the current iterate
  double relative_error = std::numeric_limits<double>::quiet_NaN();  ///< filled when a reference cost is known
};

struct SolveResult {
  Vector x;
  Vector y;
  double cost = 0.0;
  std::size_t newton_iterations = 0;
  std::size_t krylov_iterations = 0;
  double rel_fx = 0.0;
  double rel_fy = 0.0;
  double complementarity = 0.0;
  std::vector<IterationRecord> history;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

namespace ipm_detail {

/// Instance with fixed arcs (lower == upper) removed and their flow folded
/// into the supplies.
struct Reduced {
  Network net;
  std::vector<std::size_t> kept;  ///< original index of every remaining arc
};

inline Reduced drop_fixed_arcs(const Network& net) {
  Reduced r;
  Vector supply = net.supply();
  std::vector<Arc> arcs;
  for (std::size_t j = 0; j < net.num_arcs(); ++j) {
    const Arc& a = net.arc(j);
    if (a.lower == a.upper) {
      supply[static_cast<std::size_t>(a.tail)] -= a.lower;
      supply[static_cast<std::size_t>(a.head)] += a.lower;
    } else {
      arcs.push_back(a);
      r.kept.push_back(j);
    }
  }
  r.net = Network(net.num_nodes(), std::move(arcs), std::move(supply));
  return r;
}

inline std::string dump_state(const IpmState& st, double rel_fx, double rel_fy) {
  std::ostringstream os;
  os.precision(6);
  os << "iter=" << st.iter << " mu=" << st.mu << " rel_fx=" << rel_fx << " rel_fy=" << rel_fy << " dt=" << st.dt
     << " beta=" << st.beta << " active=" << st.active.active_count() << "/" << st.active.size();
  return os.str();
}

}  // namespace ipm_detail

/// Solves the instance with the AMG-preconditioned Schur solver, or with the
/// supplied Newton solver when one is given.
inline SolveResult solve(const Network& input, const SolverConfig& cfg, const IterationCallback& on_iteration = {},
                         NewtonLinearSolver* linsolve = nullptr) {
  const ipm_detail::Reduced reduced = ipm_detail::drop_fixed_arcs(input);
  const Network& net = reduced.net;
  const std::size_t m = net.num_arcs();

  SolveResult result;
  auto finish = [&](const IpmState& st) {
    result.x.assign(input.num_arcs(), 0.0);
    for (std::size_t j = 0; j < input.num_arcs(); ++j)
      if (input.arc(j).lower == input.arc(j).upper) result.x[j] = input.arc(j).lower;
    for (std::size_t k = 0; k < reduced.kept.size(); ++k) result.x[reduced.kept[k]] = st.x[k];
    result.y = st.y;
    result.cost = input.cost_of(result.x);
    result.newton_iterations = st.iter;
    return result;
  };

  const double c_scale = 1.0 + blas::norm_inf(net.costs());
  const double b_scale = 1.0 + blas::norm_inf(net.supply());
  if (m == 0) {
    if (blas::norm_inf(net.supply()) > cfg.tol * b_scale)
      throw InfeasibleError("no free arcs left to carry the supplies");
    IpmState st;
    st.y.assign(net.num_nodes(), 0.0);
    return finish(st);
  }

  SchurNewtonSolver default_solver(cfg.krylov, cfg.amg);
  NewtonLinearSolver& lin = linsolve ? *linsolve : default_solver;
  auto* schur_solver = dynamic_cast<SchurNewtonSolver*>(&lin);
  double fixed_cost = 0.0;
  for (std::size_t j = 0; j < input.num_arcs(); ++j)
    if (input.arc(j).lower == input.arc(j).upper) fixed_cost += input.arc(j).cost * input.arc(j).lower;

  IpmState st = initial_state(net, cfg);
  double best_fy = std::numeric_limits<double>::infinity();
  std::size_t best_fy_iter = 0;
  const double mu_start = st.mu;

  for (;;) {
    const Residuals res = kkt_residuals(st, net, 0.0);
    result.rel_fx = blas::norm_inf(res.f_x) / c_scale;
    result.rel_fy = blas::norm_inf(res.f_y) / b_scale;
    result.complementarity = st.mu;
    if (result.rel_fx <= cfg.tol && result.rel_fy <= cfg.tol && st.mu <= cfg.tol) return finish(st);

    if (result.rel_fy < 0.5 * best_fy) {
      best_fy = result.rel_fy;
      best_fy_iter = st.iter;
    }
    if (st.iter >= best_fy_iter + 15 && st.mu < 1e-9 * mu_start && result.rel_fy > 1e3 * cfg.tol)
      throw InfeasibleError("primal residual stagnates at " + std::to_string(result.rel_fy) +
                            " while complementarity vanishes; instance appears infeasible");
    // multipliers running off along an unbounded dual ray; feasible instances
    // can show a transient blow-up too, but their primal residual drops
    const bool diverging = st.mu > 1e6 * std::max(1.0, mu_start) && result.rel_fy > 1e3 * cfg.tol;
    if (diverging && st.iter >= best_fy_iter + 5)
      throw InfeasibleError("complementarity diverges (mu = " + std::to_string(st.mu) +
                            ") while the primal residual stays at " + std::to_string(result.rel_fy) +
                            "; instance appears infeasible");
    if (st.iter >= cfg.max_newton)
      throw NonConvergenceError("no convergence within " + std::to_string(cfg.max_newton) + " Newton iterations",
                                ipm_detail::dump_state(st, result.rel_fx, result.rel_fy));

    if (cfg.regularization) {
      std::tie(st.dt, st.beta) = adaptive_dt(st, cfg);
    } else {
      st.dt = 1.0;
      st.beta = 0.0;
    }
    std::optional<MehrotraOutcome> attempt;
    try {
      attempt.emplace(mehrotra_step(st, net, cfg, lin));
    } catch (const SolverError& e) {
      if (diverging)
        throw InfeasibleError(std::string("linear algebra broke down while complementarity diverges; instance "
                                          "appears infeasible (") + e.what() + ")");
      // Arcs pressed against a bound make the metric span too many decades
      // for the Krylov solve. Hold them early and retry once.
      const ActiveSet next = cfg.active_set ? update_active_set(st, net, cfg) : st.active;
      if (next == st.active) throw;
      apply_active_set(st, net, next, cfg);
      st.mu = mean_complementarity(st, net);
      if (cfg.regularization) std::tie(st.dt, st.beta) = adaptive_dt(st, cfg);
      attempt.emplace(mehrotra_step(st, net, cfg, lin));
    }
    MehrotraOutcome& step = *attempt;
    st = std::move(step.state);
    if (cfg.active_set && st.mu < cfg.activation_mu) {
      const ActiveSet next = update_active_set(st, net, cfg);
      if (!(next == st.active)) {
        apply_active_set(st, net, next, cfg);
        st.mu = mean_complementarity(st, net);
      }
    }

    IterationRecord rec;
    rec.iter = st.iter;
    rec.mu = st.mu;
    const Residuals after = kkt_residuals(st, net, 0.0);
    rec.rel_fx = blas::norm_inf(after.f_x) / c_scale;
    rec.rel_fy = blas::norm_inf(after.f_y) / b_scale;
    rec.krylov_predictor = step.report.krylov_predictor;
    rec.krylov_corrector = step.report.krylov_corrector;
    rec.lower_active = st.active.lower_count();
    rec.upper_active = st.active.upper_count();
    rec.active_fraction = static_cast<double>(rec.lower_active + rec.upper_active) / static_cast<double>(m);
    rec.dt = st.dt;
    rec.beta = st.beta;
    rec.alpha_x = step.report.alpha_x;
    rec.alpha_s = step.report.alpha_s;
    rec.sigma = step.report.sigma;
    rec.block_residual = step.report.block_residual;
    rec.cost = fixed_cost + net.cost_of(st.x);
    if (schur_solver) {
      rec.components = schur_solver->stats().components;
      rec.amg_levels = schur_solver->stats().amg_levels;
      rec.operator_complexity = schur_solver->stats().operator_complexity;
      rec.level_sizes = schur_solver->stats().level_sizes;
    }
    result.krylov_iterations += rec.krylov_predictor + rec.krylov_corrector;
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec);
  }
}

}  // namespace mcfipm
