#pragma once

// Preconditioned Krylov solvers over abstract operators. An operator is any
// callable `void(std::span<const double> in, std::span<double> out)`.

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"

namespace mcfipm {

template <typename F>
concept LinearOperator = std::invocable<F&, std::span<const double>, std::span<double>>;

struct KrylovStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;  ///< recomputed from the returned iterate
  bool converged = false;
  bool breakdown = false;
  std::vector<double> history;  ///< recursive relative residual per iteration
};

struct KrylovResult {
  Vector x;
  KrylovStats stats;
};

/// Identity preconditioner.
inline constexpr auto no_preconditioner = [](std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), out.begin());
};

inline auto matrix_operator(const SparseMatrix& a) {
  return [&a](std::span<const double> in, std::span<double> out) { a.multiply(in, out); };
}

namespace detail {

template <LinearOperator Op>
double true_relative_residual(Op& apply_a, std::span<const double> b, std::span<const double> x,
                              double bnorm, Vector& work, Vector* r_out = nullptr) {
  apply_a(x, work);
  for (std::size_t i = 0; i < b.size(); ++i) work[i] = b[i] - work[i];
  if (r_out) *r_out = work;
  return blas::norm2(work) / bnorm;
}

inline constexpr std::size_t residual_refresh_interval = 50;

}  // namespace detail

/// Preconditioned conjugate gradients from a zero initial guess. Stops when
/// ||b - Ax|| <= tol ||b||. Throws SolverError on nonpositive curvature.
template <LinearOperator OpA, LinearOperator OpP>
KrylovResult cg(OpA&& apply_a, OpP&& apply_p, std::span<const double> b, double tol,
                std::size_t maxit) {
  const std::size_t n = b.size();
  KrylovResult out{Vector(n, 0.0), {}};
  const double bnorm = blas::norm2(b);
  if (bnorm == 0.0) {
    out.stats.converged = true;
    return out;
  }
  Vector r(b.begin(), b.end()), z(n), p(n), q(n), work(n);
  apply_p(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = blas::dot(r, z);
  auto& x = out.x;
  auto& st = out.stats;
  while (st.iterations < maxit) {
    apply_a(std::span<const double>(p), std::span<double>(q));
    const double curvature = blas::dot(p, q);
    if (!(curvature > 0.0))
      throw SolverError("cg: nonpositive curvature " + std::to_string(curvature) + " at iteration " +
                        std::to_string(st.iterations) + " (operator not SPD)");
    const double alpha = rz / curvature;
    blas::axpy(alpha, p, x);
    blas::axpy(-alpha, q, r);
    ++st.iterations;
    if (st.iterations % detail::residual_refresh_interval == 0)
      detail::true_relative_residual(apply_a, b, x, bnorm, work, &r);
    const double rel = blas::norm2(r) / bnorm;
    st.history.push_back(rel);
    if (rel <= tol) {
      st.converged = true;
      break;
    }
    apply_p(std::span<const double>(r), std::span<double>(z));
    const double rz_new = blas::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.relative_residual = detail::true_relative_residual(apply_a, b, x, bnorm, work);
  st.converged = st.converged && st.relative_residual <= 10.0 * tol;
  return out;
}

/// Right-preconditioned BiCGStab from a zero initial guess. On rho or omega
/// breakdown the best iterate so far is returned with the breakdown flag set.
template <LinearOperator OpA, LinearOperator OpP>
KrylovResult bicgstab(OpA&& apply_a, OpP&& apply_p, std::span<const double> b, double tol,
                      std::size_t maxit) {
  const std::size_t n = b.size();
  KrylovResult out{Vector(n, 0.0), {}};
  const double bnorm = blas::norm2(b);
  if (bnorm == 0.0) {
    out.stats.converged = true;
    return out;
  }
  auto& x = out.x;
  auto& st = out.stats;
  Vector r(b.begin(), b.end()), r_hat = r, p(n, 0.0), v(n, 0.0), p_hat(n), s(n), s_hat(n), t(n),
      work(n);
  Vector best = x;
  double best_rel = 1.0;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  constexpr double tiny = 1e-300;
  while (st.iterations < maxit) {
    const double rho_new = blas::dot(r_hat, r);
    if (std::abs(rho_new) < tiny * bnorm * bnorm) {
      st.breakdown = true;
      break;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    apply_p(std::span<const double>(p), std::span<double>(p_hat));
    apply_a(std::span<const double>(p_hat), std::span<double>(v));
    const double rv = blas::dot(r_hat, v);
    if (std::abs(rv) < tiny) {
      st.breakdown = true;
      break;
    }
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    ++st.iterations;
    if (blas::norm2(s) / bnorm <= tol) {
      blas::axpy(alpha, p_hat, x);
      st.history.push_back(blas::norm2(s) / bnorm);
      st.converged = true;
      break;
    }
    apply_p(std::span<const double>(s), std::span<double>(s_hat));
    apply_a(std::span<const double>(s_hat), std::span<double>(t));
    const double tt = blas::dot(t, t);
    omega = tt > 0.0 ? blas::dot(t, s) / tt : 0.0;
    blas::axpy(alpha, p_hat, x);
    blas::axpy(omega, s_hat, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    if (st.iterations % detail::residual_refresh_interval == 0)
      detail::true_relative_residual(apply_a, b, x, bnorm, work, &r);
    const double rel = blas::norm2(r) / bnorm;
    st.history.push_back(rel);
    if (rel < best_rel) {
      best_rel = rel;
      best = x;
    }
    if (rel <= tol) {
      st.converged = true;
      break;
    }
    if (omega == 0.0) {
      st.breakdown = true;
      break;
    }
  }
  if (st.breakdown && !st.converged) x = best;
  st.relative_residual = detail::true_relative_residual(apply_a, b, x, bnorm, work);
  st.converged = st.converged && st.relative_residual <= 10.0 * tol;
  return out;
}

}  // namespace mcfipm
