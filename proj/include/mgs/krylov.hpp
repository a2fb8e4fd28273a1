// Krylov solvers used for (coarse-grid) solves: conjugate gradients and
// BiCGSTAB.  Both operate on plain value vectors through a generic
// operator-application callback and report iterations and convergence.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mgs/grid.hpp"

namespace mgs {

enum class KrylovKind { Cg, Bicgstab };

struct CoarseSolverSpec {
  KrylovKind kind = KrylovKind::Cg;
  double rel_tolerance = 1e-12;
  // max_iterations <= 0 means the default of 2x the unknown count.
  int max_iterations = 0;
};

struct KrylovResult {
  int iterations = 0;
  bool converged = true;
  bool breakdown = false;
};

namespace detail {
template <class T>
T field_dot(const std::vector<T>& a, const std::vector<T>& b) {
  return dotc(a, b);
}
}  // namespace detail

// Conjugate gradients for symmetric positive-definite operators.
template <class T, class Apply>
KrylovResult cg_solve(Apply&& apply_a, const std::vector<T>& b, std::vector<T>& x,
                      double rel_tol, int max_iter) {
  KrylovResult res;
  const std::size_t n = b.size();
  std::vector<T> r(n), p(n), ap(n);
  ap = apply_a(x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double r0 = norm2(r);
  if (r0 == 0.0) return res;
  p = r;
  T rr = detail::field_dot(r, r);
  for (int it = 0; it < max_iter; ++it) {
    ap = apply_a(p);
    const T pap = detail::field_dot(p, ap);
    if (pap == T{}) {
      res.breakdown = true;
      res.converged = false;
      return res;
    }
    const T alpha = rr / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    res.iterations = it + 1;
    if (norm2(r) / r0 <= rel_tol) return res;
    const T rr_new = detail::field_dot(r, r);
    const T beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  res.converged = false;
  return res;
}

// Right-preconditioned BiCGSTAB; `solve_m` applies one preconditioner solve
// (identity for the unpreconditioned variant).  Stops when the true
// residual norm relative to the initial one drops below rel_tol.
template <class T, class Apply, class Precond>
KrylovResult bicgstab_solve(Apply&& apply_a, Precond&& solve_m, const std::vector<T>& b,
                            std::vector<T>& x, double rel_tol, int max_iter) {
  KrylovResult res;
  const std::size_t n = b.size();
  std::vector<T> r(n), rhat(n), p(n, T{}), q(n, T{}), y(n), s(n), z(n), t(n), h(n);
  {
    std::vector<T> ax = apply_a(x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  }
  const double r0 = norm2(r);
  if (r0 == 0.0) return res;
  rhat = r;
  T rho = T(1), alpha = T(1), omega = T(1);
  for (int it = 0; it < max_iter; ++it) {
    const T rho_new = detail::field_dot(rhat, r);
    if (rho_new == T{} || omega == T{}) {
      res.breakdown = true;
      res.converged = false;
      return res;
    }
    const T beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * q[i]);
    y = solve_m(p);
    q = apply_a(y);
    const T rhat_q = detail::field_dot(rhat, q);
    if (rhat_q == T{}) {
      res.breakdown = true;
      res.converged = false;
      return res;
    }
    alpha = rho / rhat_q;
    for (std::size_t i = 0; i < n; ++i) h[i] = x[i] + alpha * y[i];
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * q[i];
    if (norm2(s) / r0 <= rel_tol) {
      x = h;
      res.iterations = it + 1;
      return res;
    }
    z = solve_m(s);
    t = apply_a(z);
    const T tt = detail::field_dot(t, t);
    if (tt == T{}) {
      res.breakdown = true;
      res.converged = false;
      return res;
    }
    omega = detail::field_dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) x[i] = h[i] + omega * z[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    res.iterations = it + 1;
    if (norm2(r) / r0 <= rel_tol) return res;
    if (!std::isfinite(norm2(r))) {
      res.breakdown = true;
      res.converged = false;
      return res;
    }
  }
  res.converged = false;
  return res;
}

// Convenience front-end per the coarse-solver specification.
template <class T, class Apply>
KrylovResult krylov_solve(const CoarseSolverSpec& spec, Apply&& apply_a,
                          const std::vector<T>& b, std::vector<T>& x) {
  const int max_iter =
      spec.max_iterations > 0 ? spec.max_iterations : 2 * static_cast<int>(b.size());
  if (spec.kind == KrylovKind::Cg)
    return cg_solve<T>(apply_a, b, x, spec.rel_tolerance, max_iter);
  auto identity = [](const std::vector<T>& v) { return v; };
  return bicgstab_solve<T>(apply_a, identity, b, x, spec.rel_tolerance, max_iter);
}

}  // namespace mgs
