// Grammar-guided genetic programming engine.
//
// (mu + lambda) evolution over derivation trees with NSGA-II selection,
// duplicate rejection through a serialization cache, per-generation
// checkpoints, and a generalization schedule that periodically swaps the
// primitive set for a larger problem and re-evaluates the population.
//
// Determinism contract: every random decision draws from a stream keyed by
// (run seed, generation, index), evaluation results are deterministic, and
// evaluation of a generation's children is embarrassingly parallel — so
// trajectories are bit-identical for any worker count and across
// checkpoint restarts.
#pragma once

#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "mgs/fitness.hpp"
#include "mgs/grammar.hpp"
#include "mgs/rng.hpp"

namespace mgs {

struct Individual {
  DerivationTree tree;
  Fitness fit;
  bool evaluated = false;
};

struct SearchConfig {
  int mu = 256;
  int lambda = 256;
  int generations = 250;
  int initial_population = 2048;
  double crossover_prob = 2.0 / 3.0;
  double terminal_mutation_prob = 1.0 / 3.0;
  int grow_min_depth = 6;
  int grow_max_depth = 12;
  int mutate_min_depth = 3;
  int mutate_max_depth = 8;
  int max_tree_size = 150;
  int generalization_interval = 0;  // 0 = single problem level
  std::uint64_t seed = 0;
  int workers = 1;
  bool random_search = false;  // baseline: lambda fresh trees per generation
};

// One step of the generalization schedule: a primitive set plus the fitness
// evaluation bound to the corresponding problem instance.
struct EvalContext {
  const PrimitiveSet* pset = nullptr;
  std::function<Fitness(const DerivationTree&)> eval;
  std::string label;
};

struct ArchiveEntry {
  std::string key;
  Fitness fit;
  int ctx = 0;
};

struct CheckpointData {
  int generation = 0;
  int ctx = 0;
  const std::vector<Individual>* population = nullptr;
  const std::vector<ArchiveEntry>* archive = nullptr;
};

struct ResumeState {
  int next_generation = 0;
  int ctx = 0;
  std::vector<Individual> population;
  std::vector<ArchiveEntry> archive;
};

struct EvolutionResult {
  std::vector<Individual> population;
  std::vector<ArchiveEntry> archive;
  std::uint64_t evaluator_invocations = 0;
  int final_ctx = 0;
};

// --- Tree generation and variation -----------------------------------------

// Typed grow: the depth target is drawn uniformly from [min_depth,
// max_depth]; below the target all alternatives are drawn uniformly, at the
// target terminals are preferred and, where a type has none, growth
// continues with a production of minimal grounding depth.  Regenerates from
// scratch until the size limit holds.
DerivationTree gen_grow(const PrimitiveSet& pset, int min_depth, int max_depth, Rng& rng,
                        int max_size = 150);

// Subtree mutation: with probability terminal_mutation_prob a random
// terminal is re-drawn from the same-typed terminals; otherwise a random
// node's subtree is replaced by a grown one (grafting the old subtree into
// a matching-typed hole of the new one when available).  Returns false when
// the tree is returned unchanged.
bool mutate_subtree(DerivationTree& tree, const PrimitiveSet& pset, int min_depth,
                    int max_depth, double terminal_mutation_prob, Rng& rng,
                    int max_size = 150);

// Swaps a uniformly chosen pair of equal-typed subtrees.  Returns false
// (parents unchanged) when no common type exists or a child would exceed
// the size limit.
bool crossover_subtree(DerivationTree& a, DerivationTree& b, const PrimitiveSet& pset,
                       Rng& rng, int max_size = 150);

// --- NSGA-II ----------------------------------------------------------------

std::vector<std::vector<int>> nsga2_fronts(const std::vector<Fitness>& fits);
std::vector<double> crowding_distances(const std::vector<Fitness>& fits,
                                       const std::vector<int>& front);

// Elitist environmental selection: fill mu slots front by front, truncating
// the last admitted front by descending crowding distance (ties broken by
// position after a seeded shuffle).
std::vector<int> select_elitist(const std::vector<Fitness>& fits, int mu, Rng& rng);

// Binary tournament on (front rank, crowding distance).
std::vector<int> select_parents(const std::vector<Fitness>& fits, int k, Rng& rng);

// --- Evolution --------------------------------------------------------------

EvolutionResult evolve(const SearchConfig& config, const std::vector<EvalContext>& contexts,
                       const std::function<void(const CheckpointData&)>& checkpoint = {},
                       const ResumeState* resume = nullptr);

}  // namespace mgs
