// Bi-objective fitness shared by the evaluator and the search engine.
#pragma once

#include <cmath>

namespace mgs {

// Objective pairs: (time-per-iteration, convergence factor) or
// (time-per-iteration, iteration count); both minimized.
enum class FitnessMode { TimeRho, TimeIters };

// Non-convergence sentinel; dominated by every finite fitness.
constexpr double kBigFitness = 1e100;

struct Fitness {
  double o1 = kBigFitness;
  double o2 = kBigFitness;
  FitnessMode mode = FitnessMode::TimeRho;

  bool finite() const { return o1 < kBigFitness && o2 < kBigFitness; }
  bool operator==(const Fitness&) const = default;
};

// Pareto dominance (strictly better in at least one objective, not worse
// in any).
inline bool dominates(const Fitness& a, const Fitness& b) {
  return (a.o1 <= b.o1 && a.o2 <= b.o2) && (a.o1 < b.o1 || a.o2 < b.o2);
}

// Estimated solving time used for ranking: t * ceil(ln eps / ln rho) in
// (t, rho) mode, t * n in (t, n) mode.
inline double rank_metric(const Fitness& f, double eps) {
  if (!f.finite()) return INFINITY;
  if (f.mode == FitnessMode::TimeIters) return f.o1 * f.o2;
  const double rho = f.o2;
  if (rho <= 0.0) return 0.0;
  if (rho >= 1.0) return INFINITY;
  const double n_eps = std::ceil(std::log(eps) / std::log(rho));
  return f.o1 * n_eps;
}

}  // namespace mgs
