// Solver evaluation: run a compiled program as an iterative method or as a
// preconditioner inside BiCGSTAB, and derive fitness / ranking values.
//
// Two time measures are produced: `t` is a deterministic operation-count
// model (units of 1e-9 s per weight multiply-add) used as the search
// objective so runs are reproducible; `t_wall` is the measured wall time
// per iteration (averaged over `repeats` solves after one untimed warm-up)
// reported by the bench/evaluate commands.
#pragma once

#include <chrono>

#include "mgs/executor.hpp"
#include "mgs/fitness.hpp"
#include "mgs/grammar.hpp"
#include "mgs/problems.hpp"

namespace mgs {

struct SolveReport {
  int n = 0;                     // iterations
  double t = 0.0;                // model time per iteration [s]
  double t_wall = 0.0;           // measured wall time per iteration [s]
  double rho = 1.0;              // asymptotic convergence factor estimate
  bool converged = false;
  double final_relative_residual = 1.0;
  bool coarse_converged = true;  // coarse Krylov health flag
};

constexpr double kOpsToSeconds = 1e-9;
constexpr double kDivergenceFactor = 1e12;

namespace detail {

template <class T>
GridFunction<T> residual_field(const Operator<T>& a, const GridFunction<T>& x,
                               const GridFunction<T>& b) {
  GridFunction<T> r = operator_apply(a, x);
  const std::int64_t n = static_cast<std::int64_t>(r.values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) r.values[i] = b.values[i] - r.values[i];
  return r;
}

}  // namespace detail

// Repeated program application from x0 = 0 until |r_n|/|r_0| <= eps.
template <class T>
SolveReport run_iterative(const Program& prog, const Problem<T>& prob, double eps,
                          int max_iter = 100, int repeats = 1, bool timed = false) {
  SolveReport rep;
  Executor<T> exec(prog, prob.solver_h);
  const Operator<T>& a = prob.solver_h.level.front().a;
  const GridDesc& g = prob.solver_h.level.front().desc;

  auto solve_once = [&](SolveReport* out) {
    GridFunction<T> x(g, prob.components);
    std::uint64_t ops = 0;
    const double r0 = norm2(prob.rhs);
    double rel = r0 == 0.0 ? 0.0 : 1.0;
    int n = 0;
    bool converged = rel <= eps || eps >= 1.0;
    bool coarse_ok = true;
    while (!converged && n < max_iter) {
      ExecStats st = exec.run(x, prob.rhs);
      ops += st.ops;
      coarse_ok = coarse_ok && st.coarse_converged;
      ++n;
      const double rn = norm2(detail::residual_field(a, x, prob.rhs));
      rel = rn / r0;
      if (!std::isfinite(rel) || rel > kDivergenceFactor) {
        if (out) {
          out->n = n;
          out->converged = false;
          out->final_relative_residual = rel;
          out->rho = kBigFitness;
          out->t = n > 0 ? static_cast<double>(ops) / n * kOpsToSeconds : 0.0;
          out->coarse_converged = coarse_ok;
        }
        return;
      }
      if (rel <= eps) converged = true;
    }
    if (out) {
      out->n = n;
      out->converged = converged;
      out->final_relative_residual = rel;
      out->rho = n > 0 ? std::pow(rel, 1.0 / n) : 1.0;
      out->t = n > 0 ? static_cast<double>(ops) / n * kOpsToSeconds : 0.0;
      out->coarse_converged = coarse_ok;
    }
  };

  solve_once(&rep);
  if (timed && rep.n > 0) {
    // one untimed warm-up, then `repeats` timed solves
    solve_once(nullptr);
    double total = 0.0;
    for (int r = 0; r < std::max(1, repeats); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      solve_once(nullptr);
      const auto t1 = std::chrono::steady_clock::now();
      total += std::chrono::duration<double>(t1 - t0).count();
    }
    rep.t_wall = total / std::max(1, repeats) / rep.n;
  }
  return rep;
}

// Right-preconditioned BiCGSTAB on the problem's true operator; every
// preconditioner solve applies the program once from a zero initial guess
// on the solver hierarchy (the shifted operator for Helmholtz).
template <class T>
SolveReport run_preconditioned(const Program& prog, const Problem<T>& prob, double eps,
                               int max_iter = 20000, int repeats = 1, bool timed = false,
                               bool use_preconditioner = true) {
  SolveReport rep;
  Executor<T> exec(prog, prob.solver_h);
  const GridDesc& g = prob.solver_h.level.front().desc;
  std::uint64_t ops = 0;
  std::uint64_t nnz = 0;
  for (const auto& s : prob.outer_a.blocks) nnz += s.entries.size();

  auto apply_a = [&](const std::vector<T>& in) {
    GridFunction<T> u(g, prob.components);
    u.values = in;
    ops += nnz * static_cast<std::uint64_t>(u.values.size());
    return operator_apply(prob.outer_a, u).values;
  };
  auto solve_m = [&](const std::vector<T>& in) {
    if (!use_preconditioner) return in;
    GridFunction<T> x(g, prob.components);
    GridFunction<T> b(g, prob.components);
    b.values = in;
    ExecStats st = exec.run(x, b);
    ops += st.ops;
    if (!st.coarse_converged) rep.coarse_converged = false;
    return x.values;
  };

  auto solve_once = [&](SolveReport* out) {
    GridFunction<T> x(g, prob.components);
    KrylovResult kr = bicgstab_solve<T>(apply_a, solve_m, prob.rhs.values, x.values, eps,
                                        max_iter);
    if (out) {
      out->n = kr.iterations;
      out->converged = kr.converged;
      const double r0 = norm2(prob.rhs);
      const double rn = norm2(detail::residual_field(prob.outer_a, x, prob.rhs));
      out->final_relative_residual = r0 == 0.0 ? 0.0 : rn / r0;
      out->rho = kr.iterations > 0 && out->final_relative_residual > 0.0
                     ? std::pow(out->final_relative_residual, 1.0 / kr.iterations)
                     : 1.0;
    }
  };

  solve_once(&rep);
  rep.t = rep.n > 0 ? static_cast<double>(ops) / rep.n * kOpsToSeconds : 0.0;
  if (timed && rep.n > 0) {
    solve_once(nullptr);
    double total = 0.0;
    for (int r = 0; r < std::max(1, repeats); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      solve_once(nullptr);
      const auto t1 = std::chrono::steady_clock::now();
      total += std::chrono::duration<double>(t1 - t0).count();
    }
    rep.t_wall = total / std::max(1, repeats) / rep.n;
  }
  return rep;
}

inline Fitness fitness_of(const SolveReport& rep, FitnessMode mode) {
  Fitness f;
  f.mode = mode;
  if (!rep.converged) return f;  // sentinel
  f.o1 = rep.t;
  f.o2 = mode == FitnessMode::TimeRho ? rep.rho : static_cast<double>(rep.n);
  return f;
}

// Evaluates a compiled program on a problem per its evaluation mode.
template <class T>
SolveReport evaluate_program(const Program& prog, const Problem<T>& prob, double eps,
                             int max_iter, int repeats = 1, bool timed = false) {
  if (prob.preconditioned)
    return run_preconditioned(prog, prob, eps, max_iter, repeats, timed);
  return run_iterative(prog, prob, eps, max_iter, repeats, timed);
}

}  // namespace mgs
