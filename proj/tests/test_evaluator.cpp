// Solver evaluation: iterative runs, preconditioned runs, fitness and
// ranking derivation.
#include <doctest.h>

#include "mgs/evaluator.hpp"

using namespace mgs;

TEST_CASE("V(2,2) red-black multigrid solves 2D Poisson h-independently") {
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 2, 2,
                                      SmootherKind::RBGaussSeidel, omega_index_of(1.15));
  int n_prev = 0;
  for (int l_max : {6, 7}) {
    const Problem<double> p = make_poisson_2d(l_max);
    const SolveReport rep = run_iterative(cyc, p, 1e-12);
    CHECK(rep.converged);
    CHECK(rep.coarse_converged);
    CHECK(rep.n >= 5);
    CHECK(rep.n <= 8);
    CHECK(rep.rho < 0.05);
    CHECK(rep.t > 0.0);
    CHECK(rep.final_relative_residual <= 1e-12);
    // rho is the n-th root of the final residual reduction
    CHECK(std::pow(rep.rho, rep.n) ==
          doctest::Approx(rep.final_relative_residual).epsilon(1e-10));
    if (n_prev) CHECK(std::abs(rep.n - n_prev) <= 1);
    n_prev = rep.n;
  }
}

TEST_CASE("iteration counts are deterministic and repeatable") {
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 1, 1,
                                      SmootherKind::JacobiPointwise, omega_index_of(0.8));
  const Problem<double> p = make_poisson_2d(6);
  const SolveReport a = run_iterative(cyc, p, 1e-10);
  const SolveReport b = run_iterative(cyc, p, 1e-10);
  CHECK(a.converged);
  CHECK(a.n == b.n);
  CHECK(a.t == b.t);
  CHECK(a.rho == b.rho);
}

TEST_CASE("timed runs report wall time per iteration") {
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 1, 1,
                                      SmootherKind::RBGaussSeidel, omega_index_of(1.0));
  const Problem<double> p = make_poisson_2d(6);
  const SolveReport rep = run_iterative(cyc, p, 1e-10, 100, 2, true);
  CHECK(rep.converged);
  CHECK(rep.t_wall > 0.0);
}

TEST_CASE("trivial tolerance short-circuits") {
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 1, 1,
                                      SmootherKind::JacobiPointwise, 18);
  const Problem<double> p = make_poisson_2d(6);
  const SolveReport rep = run_iterative(cyc, p, 1.0);
  CHECK(rep.converged);
  CHECK(rep.n == 0);
  CHECK(rep.rho == 1.0);
}

TEST_CASE("divergent methods hit the guard and yield the sentinel fitness") {
  // undamped Jacobi at omega = 1.9 diverges on Poisson
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 1, 1,
                                      SmootherKind::JacobiPointwise, omega_index_of(1.9));
  const Problem<double> p = make_poisson_2d(6);
  const SolveReport rep = run_iterative(cyc, p, 1e-12, 100);
  CHECK_FALSE(rep.converged);
  const Fitness f = fitness_of(rep, FitnessMode::TimeRho);
  CHECK_FALSE(f.finite());
  CHECK(f.o1 == kBigFitness);
}

TEST_CASE("non-convergent but bounded methods exhaust max_iter") {
  const Program cyc = reference_cycle(5, 1, CycleKind::V, 0, 1,
                                      SmootherKind::JacobiPointwise, omega_index_of(0.1));
  const Problem<double> p = make_poisson_2d(6);
  const SolveReport rep = run_iterative(cyc, p, 1e-12, 5);
  CHECK_FALSE(rep.converged);
  CHECK(rep.n == 5);
  CHECK(rep.rho < 1.0);  // still contracting, just too slowly for the cap
}

TEST_CASE("fitness and ranking") {
  SolveReport rep;
  rep.converged = true;
  rep.n = 8;
  rep.t = 2.0e-3;
  rep.rho = 0.1;
  Fitness fr = fitness_of(rep, FitnessMode::TimeRho);
  CHECK(fr.o1 == 2.0e-3);
  CHECK(fr.o2 == 0.1);
  // n_eps = ceil(ln 1e-12 / ln 0.1) = 12
  CHECK(rank_metric(fr, 1e-12) == doctest::Approx(2.0e-3 * 12));
  Fitness fi = fitness_of(rep, FitnessMode::TimeIters);
  CHECK(fi.o2 == 8.0);
  CHECK(rank_metric(fi, 1e-7) == doctest::Approx(2.0e-3 * 8));
  Fitness bad;
  CHECK(rank_metric(bad, 1e-12) == INFINITY);
  Fitness stalled{1.0e-3, 1.0, FitnessMode::TimeRho};
  CHECK(rank_metric(stalled, 1e-12) == INFINITY);
}

TEST_CASE("dominance") {
  const Fitness a{1.0, 0.2, FitnessMode::TimeRho};
  const Fitness b{2.0, 0.3, FitnessMode::TimeRho};
  const Fitness c{0.5, 0.4, FitnessMode::TimeRho};
  CHECK(dominates(a, b));
  CHECK_FALSE(dominates(b, a));
  CHECK_FALSE(dominates(a, c));
  CHECK_FALSE(dominates(c, a));
  CHECK_FALSE(dominates(a, a));
}

TEST_CASE("shifted-operator preconditioning accelerates the Helmholtz solve") {
  const Problem<std::complex<double>> p = make_helmholtz_2d(20.0);
  const Program cyc = reference_cycle(p.depth(), 1, CycleKind::V, 0, 1,
                                      SmootherKind::RBGaussSeidel, omega_index_of(1.25));
  const SolveReport pre = run_preconditioned(cyc, p, 1e-7, 2000);
  CHECK(pre.converged);
  CHECK(pre.n > 0);
  CHECK(pre.t > 0.0);
  const SolveReport plain = run_preconditioned(cyc, p, 1e-7, 2000, 1, false, false);
  if (plain.converged) CHECK(plain.n > pre.n);

  // evaluate_program dispatches on the problem's evaluation mode
  const SolveReport via = evaluate_program(cyc, p, 1e-7, 2000);
  CHECK(via.n == pre.n);
  const Problem<double> pp = make_poisson_2d(6);
  const Program pcyc = reference_cycle(5, 1, CycleKind::V, 1, 1,
                                       SmootherKind::RBGaussSeidel, omega_index_of(1.0));
  CHECK(evaluate_program(pcyc, pp, 1e-10, 100).converged);
}
