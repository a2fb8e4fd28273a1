#include "mgs/gp.hpp"

#include <algorithm>
#include <atomic>
#include <climits>
#include <stdexcept>
#include <thread>

namespace mgs {

namespace {

// Stream salts: one per independent source of randomness.
constexpr std::uint64_t kSaltGrow = 1;
constexpr std::uint64_t kSaltSelect = 2;
constexpr std::uint64_t kSaltVary = 3;
constexpr std::uint64_t kSaltShuffle = 4;

// Typed grow helper; records the resolved type of every emitted token so
// callers can locate same-typed holes without re-running the checker.
struct Grower {
  const PrimitiveSet& ps;
  Rng& rng;
  int limit;
  int max_tokens;
  std::vector<std::string> tokens;
  std::vector<TypeTag> tags;

  int ground_depth(const Production& p) const {
    int m = 0;
    for (const TypeTag& in : p.in) {
      auto it = ps.min_depth.find(in);
      if (it == ps.min_depth.end()) return INT_MAX;
      m = std::max(m, it->second);
    }
    return 1 + m;
  }

  bool grow(const TypeTag& tag, int depth) {
    if (static_cast<int>(tokens.size()) >= max_tokens) return false;
    auto it = ps.alternatives.find(tag);
    if (it == ps.alternatives.end() || it->second.empty()) return false;
    const std::vector<int>& alts = it->second;
    int pick;
    if (depth >= limit) {
      // past the depth target: prefer terminals, otherwise continue along a
      // shortest route to termination
      std::vector<int> pool;
      for (int id : alts)
        if (ps.prod(id).terminal()) pool.push_back(id);
      if (pool.empty()) {
        int best = INT_MAX;
        for (int id : alts) {
          const int d = ground_depth(ps.prod(id));
          if (d < best) {
            best = d;
            pool.assign(1, id);
          } else if (d == best) {
            pool.push_back(id);
          }
        }
      }
      pick = pool[rng.uniform_int(pool.size())];
    } else {
      pick = alts[rng.uniform_int(alts.size())];
    }
    const Production& p = ps.prod(pick);
    tokens.push_back(p.name);
    tags.push_back(tag);
    for (const TypeTag& in : p.in)
      if (!grow(in, depth + 1)) return false;
    return true;
  }
};

// Subtree extents for a token/tag list produced by Grower.
std::vector<int> subtree_sizes(const std::vector<std::string>& tokens,
                               const std::vector<TypeTag>& tags, const PrimitiveSet& ps) {
  std::vector<int> sizes(tokens.size(), 1);
  auto walk = [&](auto&& self, int i) -> int {
    const Production& p = ps.prod(ps.by_name_out.at({tokens[i], tags[i]}));
    int j = i + 1;
    for (std::size_t k = 0; k < p.in.size(); ++k) j += self(self, j);
    sizes[i] = j - i;
    return sizes[i];
  };
  int i = 0;
  while (i < static_cast<int>(tokens.size())) i += walk(walk, i);
  return sizes;
}

void splice(std::vector<std::string>& tokens, int pos, int len,
            const std::vector<std::string>& repl) {
  tokens.erase(tokens.begin() + pos, tokens.begin() + pos + len);
  tokens.insert(tokens.begin() + pos, repl.begin(), repl.end());
}

const PrimitiveSet& pset_checked(const EvalContext& c) {
  if (!c.pset || !c.eval)
    throw std::invalid_argument("evolve: incomplete evaluation context");
  return *c.pset;
}

void seeded_shuffle(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[static_cast<int>(rng.uniform_int(i + 1))]);
}

}  // namespace

DerivationTree gen_grow(const PrimitiveSet& pset, int min_depth, int max_depth, Rng& rng,
                        int max_size) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int limit =
        min_depth + static_cast<int>(rng.uniform_int(max_depth - min_depth + 1));
    Grower gr{pset, rng, limit, max_size + 1, {}, {}};
    if (gr.grow(pset.start, 1) && static_cast<int>(gr.tokens.size()) <= max_size)
      return DerivationTree{std::move(gr.tokens)};
  }
  throw std::runtime_error("gen_grow: no tree within the size limit after 1000 attempts");
}

bool mutate_subtree(DerivationTree& tree, const PrimitiveSet& pset, int min_depth,
                    int max_depth, double terminal_mutation_prob, Rng& rng, int max_size) {
  TreeInfo info = type_check(tree, pset);
  if (!info.ok) throw std::logic_error("mutate_subtree: " + info.diagnostic);
  const int n = tree.size();

  if (rng.bernoulli(terminal_mutation_prob)) {
    std::vector<int> terms;
    for (int i = 0; i < n; ++i)
      if (pset.prod(info.prod[i]).terminal()) terms.push_back(i);
    if (terms.empty()) return false;
    const int node = terms[rng.uniform_int(terms.size())];
    std::vector<int> talts;
    for (int id : pset.alternatives.at(info.tag[node]))
      if (pset.prod(id).terminal()) talts.push_back(id);
    const Production& p = pset.prod(talts[rng.uniform_int(talts.size())]);
    const bool changed = p.name != tree.tokens[node];
    tree.tokens[node] = p.name;
    return changed;
  }

  const int node = static_cast<int>(rng.uniform_int(n));
  const TypeTag root_tag = info.tag[node];
  const int limit =
      min_depth + static_cast<int>(rng.uniform_int(max_depth - min_depth + 1));
  Grower gr{pset, rng, limit, max_size + 1, {}, {}};
  if (!gr.grow(root_tag, 1)) return false;
  std::vector<std::string> repl = std::move(gr.tokens);

  // graft the displaced subtree into a same-typed hole of the replacement
  // when one exists; plain replacement otherwise
  std::vector<int> holes;
  for (int p = 1; p < static_cast<int>(repl.size()); ++p)
    if (gr.tags[p] == root_tag) holes.push_back(p);
  if (!holes.empty()) {
    const std::vector<int> sizes = subtree_sizes(repl, gr.tags, pset);
    const int h = holes[rng.uniform_int(holes.size())];
    const std::vector<std::string> old(tree.tokens.begin() + node,
                                       tree.tokens.begin() + node + info.subtree[node]);
    splice(repl, h, sizes[h], old);
  }

  if (n - info.subtree[node] + static_cast<int>(repl.size()) > max_size) return false;
  splice(tree.tokens, node, info.subtree[node], repl);
  return true;
}

bool crossover_subtree(DerivationTree& a, DerivationTree& b, const PrimitiveSet& pset,
                       Rng& rng, int max_size) {
  TreeInfo ia = type_check(a, pset);
  TreeInfo ib = type_check(b, pset);
  if (!ia.ok) throw std::logic_error("crossover_subtree: " + ia.diagnostic);
  if (!ib.ok) throw std::logic_error("crossover_subtree: " + ib.diagnostic);

  std::map<TypeTag, std::pair<std::vector<int>, std::vector<int>>> nodes;
  for (int i = 0; i < a.size(); ++i) nodes[ia.tag[i]].first.push_back(i);
  for (int j = 0; j < b.size(); ++j) nodes[ib.tag[j]].second.push_back(j);

  std::uint64_t total = 0;
  for (const auto& [tag, lists] : nodes)
    total += static_cast<std::uint64_t>(lists.first.size()) * lists.second.size();
  if (total == 0) return false;

  // uniform over all equal-typed node pairs
  std::uint64_t r = rng.uniform_int(total);
  int na = -1, nb = -1;
  for (const auto& [tag, lists] : nodes) {
    const std::uint64_t block =
        static_cast<std::uint64_t>(lists.first.size()) * lists.second.size();
    if (r < block) {
      na = lists.first[r / lists.second.size()];
      nb = lists.second[r % lists.second.size()];
      break;
    }
    r -= block;
  }

  const int sa = ia.subtree[na];
  const int sb = ib.subtree[nb];
  if (a.size() - sa + sb > max_size || b.size() - sb + sa > max_size) return false;
  const std::vector<std::string> suba(a.tokens.begin() + na, a.tokens.begin() + na + sa);
  const std::vector<std::string> subb(b.tokens.begin() + nb, b.tokens.begin() + nb + sb);
  splice(a.tokens, na, sa, subb);
  splice(b.tokens, nb, sb, suba);
  return true;
}

std::vector<std::vector<int>> nsga2_fronts(const std::vector<Fitness>& fits) {
  const int n = static_cast<int>(fits.size());
  std::vector<int> dom_count(n, 0);
  std::vector<std::vector<int>> dominated(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(fits[i], fits[j]))
        dominated[i].push_back(j);
      else if (dominates(fits[j], fits[i]))
        ++dom_count[i];
    }
  std::vector<std::vector<int>> fronts;
  std::vector<int> current;
  for (int i = 0; i < n; ++i)
    if (dom_count[i] == 0) current.push_back(i);
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int i : current)
      for (int j : dominated[i])
        if (--dom_count[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distances(const std::vector<Fitness>& fits,
                                       const std::vector<int>& front) {
  const int m = static_cast<int>(front.size());
  std::vector<double> dist(m, 0.0);
  if (m <= 2) {
    std::fill(dist.begin(), dist.end(), INFINITY);
    return dist;
  }
  for (int obj = 0; obj < 2; ++obj) {
    auto value = [&](int k) {
      return obj == 0 ? fits[front[k]].o1 : fits[front[k]].o2;
    };
    std::vector<int> idx(m);
    for (int k = 0; k < m; ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int x, int y) { return value(x) < value(y); });
    dist[idx.front()] = INFINITY;
    dist[idx.back()] = INFINITY;
    const double range = value(idx.back()) - value(idx.front());
    if (range <= 0.0) continue;
    for (int k = 1; k + 1 < m; ++k)
      dist[idx[k]] += (value(idx[k + 1]) - value(idx[k - 1])) / range;
  }
  return dist;
}

std::vector<int> select_elitist(const std::vector<Fitness>& fits, int mu, Rng& rng) {
  std::vector<int> chosen;
  for (const std::vector<int>& front : nsga2_fronts(fits)) {
    if (static_cast<int>(chosen.size() + front.size()) <= mu) {
      chosen.insert(chosen.end(), front.begin(), front.end());
      if (static_cast<int>(chosen.size()) == mu) break;
      continue;
    }
    // truncate the last admitted front by crowding distance, resolving ties
    // by position after a seeded shuffle
    const std::vector<double> dist = crowding_distances(fits, front);
    std::vector<int> perm(front.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = static_cast<int>(k);
    seeded_shuffle(perm, rng);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int x, int y) { return dist[x] > dist[y]; });
    for (int k = 0; static_cast<int>(chosen.size()) < mu; ++k)
      chosen.push_back(front[perm[k]]);
    break;
  }
  return chosen;
}

std::vector<int> select_parents(const std::vector<Fitness>& fits, int k, Rng& rng) {
  const int n = static_cast<int>(fits.size());
  std::vector<int> rank(n, 0);
  std::vector<double> dist(n, 0.0);
  const std::vector<std::vector<int>> fronts = nsga2_fronts(fits);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    const std::vector<double> d = crowding_distances(fits, fronts[f]);
    for (std::size_t p = 0; p < fronts[f].size(); ++p) {
      rank[fronts[f][p]] = static_cast<int>(f);
      dist[fronts[f][p]] = d[p];
    }
  }
  std::vector<int> parents;
  parents.reserve(k);
  for (int t = 0; t < k; ++t) {
    const int i = static_cast<int>(rng.uniform_int(n));
    const int j = static_cast<int>(rng.uniform_int(n));
    int win = i;
    if (rank[j] < rank[i] || (rank[j] == rank[i] && dist[j] > dist[i]))
      win = j;
    else if (rank[j] == rank[i] && dist[j] == dist[i])
      win = std::min(i, j);
    parents.push_back(win);
  }
  return parents;
}

EvolutionResult evolve(const SearchConfig& config, const std::vector<EvalContext>& contexts,
                       const std::function<void(const CheckpointData&)>& checkpoint,
                       const ResumeState* resume) {
  if (contexts.empty()) throw std::invalid_argument("evolve: no evaluation context");
  const int nctx = static_cast<int>(contexts.size());
  auto ctx_of = [&](int gen) {
    if (config.generalization_interval <= 0) return 0;
    return std::min(gen / config.generalization_interval, nctx - 1);
  };

  std::unordered_set<std::string> seen;
  std::unordered_map<std::string, Fitness> cache;  // valid for the current context
  std::vector<ArchiveEntry> archive;
  std::uint64_t invocations = 0;
  int ctx = 0;
  std::vector<Individual> pop;
  int start_gen = 1;

  // Evaluates a batch, charging each distinct serialization once; results
  // land in deterministic (first-occurrence) archive order regardless of
  // the worker count.  The context's eval callback must be thread-safe.
  auto evaluate_batch = [&](std::vector<Individual*>& batch) {
    std::vector<std::string> keys(batch.size());
    std::vector<std::string> queue;
    std::vector<const DerivationTree*> trees;
    std::unordered_map<std::string, int> pos;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      keys[i] = batch[i]->tree.serialize();
      if (cache.count(keys[i]) || pos.count(keys[i])) continue;
      pos[keys[i]] = static_cast<int>(queue.size());
      queue.push_back(keys[i]);
      trees.push_back(&batch[i]->tree);
    }
    std::vector<Fitness> results(queue.size());
    const int workers = std::max(1, config.workers);
    if (workers == 1 || queue.size() <= 1) {
      for (std::size_t q = 0; q < queue.size(); ++q)
        results[q] = contexts[ctx].eval(*trees[q]);
    } else {
      std::atomic<std::size_t> head{0};
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t q = head.fetch_add(1); q < queue.size();
               q = head.fetch_add(1))
            results[q] = contexts[ctx].eval(*trees[q]);
        });
      for (std::thread& th : pool) th.join();
    }
    invocations += queue.size();
    for (std::size_t q = 0; q < queue.size(); ++q) {
      cache[queue[q]] = results[q];
      archive.push_back({queue[q], results[q], ctx});
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i]->fit = cache.at(keys[i]);
      batch[i]->evaluated = true;
      seen.insert(keys[i]);
    }
  };

  auto fitnesses = [](const std::vector<Individual>& v) {
    std::vector<Fitness> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = v[i].fit;
    return f;
  };

  if (resume) {
    pop = resume->population;
    ctx = resume->ctx;
    start_gen = resume->next_generation;
    archive = resume->archive;
    for (const ArchiveEntry& e : archive) {
      seen.insert(e.key);
      if (e.ctx == ctx) cache[e.key] = e.fit;
    }
  } else {
    std::vector<Individual> init(config.initial_population);
    for (int i = 0; i < config.initial_population; ++i) {
      Rng rng = rng_stream(config.seed, 0, i, kSaltGrow);
      init[i].tree = gen_grow(pset_checked(contexts[0]), config.grow_min_depth,
                              config.grow_max_depth, rng, config.max_tree_size);
    }
    std::vector<Individual*> batch(init.size());
    for (std::size_t i = 0; i < init.size(); ++i) batch[i] = &init[i];
    evaluate_batch(batch);
    Rng shuf = rng_stream(config.seed, 0, 0, kSaltShuffle);
    for (int idx : select_elitist(fitnesses(init), std::min<int>(config.mu, init.size()),
                                  shuf))
      pop.push_back(init[idx]);
    if (checkpoint) checkpoint({0, ctx, &pop, &archive});
  }

  for (int g = start_gen; g <= config.generations; ++g) {
    const int want = ctx_of(g);
    if (want != ctx) {
      // generalization step: switch problem size and re-evaluate everyone
      ctx = want;
      cache.clear();
      for (Individual& ind : pop) ind.evaluated = false;
      std::vector<Individual*> batch(pop.size());
      for (std::size_t i = 0; i < pop.size(); ++i) batch[i] = &pop[i];
      evaluate_batch(batch);
    }

    const PrimitiveSet& ps = pset_checked(contexts[ctx]);
    std::vector<Individual> children;
    children.reserve(config.lambda);
    if (config.random_search) {
      for (int j = 0; j < config.lambda; ++j) {
        Rng rng = rng_stream(config.seed, g, j, kSaltGrow);
        Individual c;
        for (int attempt = 0; attempt < 50; ++attempt) {
          c.tree = gen_grow(ps, config.grow_min_depth, config.grow_max_depth, rng,
                            config.max_tree_size);
          if (!seen.count(c.tree.serialize())) break;
        }
        children.push_back(std::move(c));
      }
    } else {
      Rng sel = rng_stream(config.seed, g, 0, kSaltSelect);
      const std::vector<int> parents =
          select_parents(fitnesses(pop), config.lambda, sel);
      auto ensure_novel = [&](DerivationTree& t, Rng& rng) {
        for (int attempt = 0; attempt < 50; ++attempt) {
          if (!seen.count(t.serialize())) return;
          mutate_subtree(t, ps, config.mutate_min_depth, config.mutate_max_depth,
                         config.terminal_mutation_prob, rng, config.max_tree_size);
        }
        if (seen.count(t.serialize()))
          t = gen_grow(ps, config.grow_min_depth, config.grow_max_depth, rng,
                       config.max_tree_size);
      };
      for (int j = 0; j < config.lambda; j += 2) {
        Rng rng = rng_stream(config.seed, g, j / 2, kSaltVary);
        DerivationTree c1 = pop[parents[j]].tree;
        const bool has_pair = j + 1 < config.lambda;
        DerivationTree c2 = has_pair ? pop[parents[j + 1]].tree : DerivationTree{};
        if (has_pair && rng.bernoulli(config.crossover_prob)) {
          crossover_subtree(c1, c2, ps, rng, config.max_tree_size);
        } else {
          mutate_subtree(c1, ps, config.mutate_min_depth, config.mutate_max_depth,
                         config.terminal_mutation_prob, rng, config.max_tree_size);
          if (has_pair)
            mutate_subtree(c2, ps, config.mutate_min_depth, config.mutate_max_depth,
                           config.terminal_mutation_prob, rng, config.max_tree_size);
        }
        ensure_novel(c1, rng);
        children.push_back({std::move(c1), {}, false});
        if (has_pair) {
          ensure_novel(c2, rng);
          children.push_back({std::move(c2), {}, false});
        }
      }
    }

    std::vector<Individual*> batch(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) batch[i] = &children[i];
    evaluate_batch(batch);

    // elitist (mu + lambda): parents precede children so index-order tie
    // breaking favors the incumbent
    std::vector<Individual> combined = pop;
    combined.insert(combined.end(), children.begin(), children.end());
    Rng shuf = rng_stream(config.seed, g, 1, kSaltShuffle);
    std::vector<Individual> next;
    for (int idx :
         select_elitist(fitnesses(combined), std::min<int>(config.mu, combined.size()),
                        shuf))
      next.push_back(combined[idx]);
    pop = std::move(next);
    if (checkpoint) checkpoint({g, ctx, &pop, &archive});
  }

  return {std::move(pop), std::move(archive), invocations, ctx};
}

}  // namespace mgs
