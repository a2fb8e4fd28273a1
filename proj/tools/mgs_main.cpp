// Command-line runner: evolutionary search (evolve), single-tree
// evaluation (evaluate), reference-cycle baselines (bench), and DOT
// rendering of a solver tree (render).
//
// Exit codes: 0 success, 2 configuration/input error, 3 runtime failure.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgs/evaluator.hpp"
#include "mgs/gp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgs;

namespace {

// --------------------------------------------------------------------------
// Problem registry: type-erased handle over the real/complex problem types.

struct ProblemHandle {
  std::string name;
  int l_max = 0;
  int depth = 5;
  int components = 1;
  double epsilon = 1e-12;
  bool preconditioned = false;
  FitnessMode mode = FitnessMode::TimeRho;
  // run(program, eps, max_iter, repeats, timed)
  std::function<SolveReport(const Program&, double, int, int, bool)> run;
};

template <class T>
ProblemHandle wrap_problem(std::shared_ptr<Problem<T>> p) {
  ProblemHandle h;
  h.name = p->name;
  h.l_max = p->l_max;
  h.depth = p->depth();
  h.components = p->components;
  h.epsilon = p->epsilon;
  h.preconditioned = p->preconditioned;
  h.mode = p->mode;
  h.run = [p](const Program& prog, double eps, int max_iter, int repeats, bool timed) {
    return evaluate_program(prog, *p, eps, max_iter, repeats, timed);
  };
  return h;
}

// l_max <= 0 selects the problem's published default size.
ProblemHandle make_problem(const std::string& name, int l_max) {
  if (name == "helmholtz2d") {
    const int lm = l_max > 0 ? l_max : 7;
    if (lm < 5) throw std::invalid_argument("helmholtz2d: need l_max >= 5");
    const double k = 0.625 * static_cast<double>(1 << lm);
    return wrap_problem(std::make_shared<Problem<std::complex<double>>>(make_helmholtz_2d(k)));
  }
  int lm = l_max;
  if (lm <= 0) lm = name == "poisson2d" ? 11 : name == "poisson3d" ? 7 : 10;
  if (lm < 5) throw std::invalid_argument(name + ": need l_max >= 5");
  std::shared_ptr<Problem<double>> p;
  if (name == "poisson2d")
    p = std::make_shared<Problem<double>>(make_poisson_2d(lm));
  else if (name == "poisson3d")
    p = std::make_shared<Problem<double>>(make_poisson_3d(lm));
  else if (name == "elasticity2d")
    p = std::make_shared<Problem<double>>(make_elasticity_2d(lm));
  else
    throw std::invalid_argument("unknown problem: " + name);
  return wrap_problem(std::move(p));
}

GrammarConfig grammar_config_for(const ProblemHandle& h) {
  GrammarConfig cfg;
  cfg.components = h.components;
  cfg.collective_jacobi = h.components > 1;
  return cfg;
}

// --------------------------------------------------------------------------
// Formatting helpers.

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string mode_name(FitnessMode m) { return m == FitnessMode::TimeRho ? "t_rho" : "t_n"; }

FitnessMode mode_of(const std::string& s) {
  if (s == "t_rho") return FitnessMode::TimeRho;
  if (s == "t_n") return FitnessMode::TimeIters;
  throw std::invalid_argument("unknown fitness mode: " + s);
}

// --------------------------------------------------------------------------
// Flat key-value configuration file: `key = value` lines, '#' comments.

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    auto trim = [&](std::string s) {
      s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
      s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
      return s;
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected `key = value`");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw std::invalid_argument("level schedule must be strictly increasing: " + text);
  return out;
}

// Everything an experiment needs, resolved from defaults, config file, and
// command-line flags (in that precedence order).
struct RunOptions {
  std::string problem;
  std::vector<int> levels;  // l_max schedule; empty = problem default
  SearchConfig sc;
  double epsilon = -1.0;  // <0 = problem default
  int max_iter = -1;      // <0 = mode default
  int promising = 50;     // front cut size
  std::string out_dir = ".";
  std::string resume_path;
};

void apply_config_map(const std::map<std::string, std::string>& kv, RunOptions& o) {
  for (const auto& [key, value] : kv) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "mu") o.sc.mu = as_int();
    else if (key == "lambda") o.sc.lambda = as_int();
    else if (key == "generations") o.sc.generations = as_int();
    else if (key == "initial_population") o.sc.initial_population = as_int();
    else if (key == "crossover_prob") o.sc.crossover_prob = as_double();
    else if (key == "terminal_mutation_prob") o.sc.terminal_mutation_prob = as_double();
    else if (key == "grow_min_depth") o.sc.grow_min_depth = as_int();
    else if (key == "grow_max_depth") o.sc.grow_max_depth = as_int();
    else if (key == "mutate_min_depth") o.sc.mutate_min_depth = as_int();
    else if (key == "mutate_max_depth") o.sc.mutate_max_depth = as_int();
    else if (key == "max_tree_size") o.sc.max_tree_size = as_int();
    else if (key == "generalization_interval") o.sc.generalization_interval = as_int();
    else if (key == "seed") o.sc.seed = std::stoull(value);
    else if (key == "workers") o.sc.workers = as_int();
    else if (key == "random_search") o.sc.random_search = value == "true" || value == "1";
    else if (key == "problem") o.problem = value;
    else if (key == "levels") o.levels = parse_levels(value);
    else if (key == "epsilon") o.epsilon = as_double();
    else if (key == "max_iter") o.max_iter = as_int();
    else if (key == "promising") o.promising = as_int();
    else throw std::invalid_argument("unknown config key: " + key);
  }
}

// Published search settings per benchmark family.
void apply_problem_defaults(RunOptions& o) {
  if (o.problem == "helmholtz2d") {
    o.sc.generations = 150;
    o.sc.initial_population = 1024;
    o.sc.mu = o.sc.lambda = 128;
    o.sc.generalization_interval = 50;
  } else {
    o.sc.generations = 250;
    o.sc.initial_population = 2048;
    o.sc.mu = o.sc.lambda = 256;
    o.sc.generalization_interval = 0;
  }
}

// --------------------------------------------------------------------------
// Tree files: comment lines, `problem:` / `depth:` headers, then the
// whitespace-separated token list.

struct TreeFile {
  std::string problem;  // empty = unspecified
  int depth = 0;        // 0 = unspecified
  DerivationTree tree;
};

TreeFile read_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open tree file: " + path);
  TreeFile tf;
  std::string line, tokens;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.rfind("problem:", 0) == 0) {
      std::stringstream ss(line.substr(8));
      ss >> tf.problem;
      continue;
    }
    if (line.rfind("depth:", 0) == 0) {
      tf.depth = std::stoi(line.substr(6));
      continue;
    }
    tokens += line + " ";
  }
  tf.tree = DerivationTree::deserialize(tokens);
  if (tf.tree.size() == 0) throw std::invalid_argument(path + ": no tree tokens");
  return tf;
}

void write_tree_file(const std::string& path, const DerivationTree& tree,
                     const std::string& problem, int depth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# solver derivation tree\n";
  out << "problem: " << problem << "\n";
  out << "depth: " << depth << "\n";
  out << tree.serialize() << "\n";
}

Program compile_checked(const DerivationTree& tree, const PrimitiveSet& ps) {
  const TreeInfo info = type_check(tree, ps);
  if (!info.ok) throw std::invalid_argument("invalid tree: " + info.diagnostic);
  return compile_tree(tree, ps);
}

// --------------------------------------------------------------------------
// Checkpoints.

json fitness_to_json(const Fitness& f) {
  return {{"o1", f.o1}, {"o2", f.o2}, {"mode", mode_name(f.mode)}};
}

Fitness fitness_from_json(const json& j) {
  Fitness f;
  f.o1 = j.at("o1").get<double>();
  f.o2 = j.at("o2").get<double>();
  f.mode = mode_of(j.at("mode").get<std::string>());
  return f;
}

void write_checkpoint(const std::string& path, const CheckpointData& cp,
                      const RunOptions& o) {
  json j;
  j["problem"] = o.problem;
  j["seed"] = o.sc.seed;
  j["generation"] = cp.generation;
  j["ctx"] = cp.ctx;
  json pop = json::array();
  for (const Individual& ind : *cp.population) {
    json e = fitness_to_json(ind.fit);
    e["tree"] = ind.tree.serialize();
    e["evaluated"] = ind.evaluated;
    pop.push_back(std::move(e));
  }
  j["population"] = std::move(pop);
  json arch = json::array();
  for (const ArchiveEntry& e : *cp.archive) {
    json a = fitness_to_json(e.fit);
    a["key"] = e.key;
    a["ctx"] = e.ctx;
    arch.push_back(std::move(a));
  }
  j["archive"] = std::move(arch);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

ResumeState read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open checkpoint: " + path);
  json j;
  in >> j;
  ResumeState rs;
  rs.next_generation = j.at("generation").get<int>() + 1;
  rs.ctx = j.at("ctx").get<int>();
  for (const json& e : j.at("population")) {
    Individual ind;
    ind.tree = DerivationTree::deserialize(e.at("tree").get<std::string>());
    ind.fit = fitness_from_json(e);
    ind.evaluated = e.at("evaluated").get<bool>();
    rs.population.push_back(std::move(ind));
  }
  for (const json& e : j.at("archive"))
    rs.archive.push_back({e.at("key").get<std::string>(), fitness_from_json(e),
                          e.at("ctx").get<int>()});
  return rs;
}

// --------------------------------------------------------------------------
// evolve

int cmd_evolve(RunOptions o) {
  if (o.levels.empty()) o.levels = {make_problem(o.problem, 0).l_max};
  if (o.levels.size() > 1 && o.sc.generalization_interval <= 0)
    throw std::invalid_argument(
        "a multi-level schedule needs generalization_interval > 0");

  // Build one evaluation context per schedule level.  Primitive sets and
  // problem handles are owned here and outlive the search.
  std::vector<std::shared_ptr<ProblemHandle>> handles;
  std::vector<std::unique_ptr<PrimitiveSet>> psets;
  std::vector<EvalContext> contexts;
  for (int lvl : o.levels) {
    auto h = std::make_shared<ProblemHandle>(make_problem(o.problem, lvl));
    auto ps = std::make_unique<PrimitiveSet>(generate_grammar(h->depth, grammar_config_for(*h)));
    const double eps = o.epsilon > 0 ? o.epsilon : h->epsilon;
    const int max_iter = o.max_iter > 0 ? o.max_iter : (h->preconditioned ? 20000 : 100);
    EvalContext ctx;
    ctx.pset = ps.get();
    ctx.label = h->name + "_l" + std::to_string(h->l_max);
    ctx.eval = [h, ps = ps.get(), eps, max_iter](const DerivationTree& t) -> Fitness {
      try {
        const SolveReport rep = h->run(compile_tree(t, *ps), eps, max_iter, 1, false);
        return fitness_of(rep, h->mode);
      } catch (const std::exception&) {
        return Fitness{};  // sentinel: the individual is not viable
      }
    };
    handles.push_back(std::move(h));
    psets.push_back(std::move(ps));
    contexts.push_back(std::move(ctx));
  }

  fs::create_directories(o.out_dir);
  ResumeState resume;
  const bool resuming = !o.resume_path.empty();
  if (resuming) resume = read_checkpoint(o.resume_path);

  auto checkpoint = [&](const CheckpointData& cp) {
    write_checkpoint(o.out_dir + "/checkpoint_" + std::to_string(cp.generation) + ".json",
                     cp, o);
  };

  const EvolutionResult res =
      evolve(o.sc, contexts, checkpoint, resuming ? &resume : nullptr);
  const ProblemHandle& fh = *handles[res.final_ctx];
  const double eps = o.epsilon > 0 ? o.epsilon : fh.epsilon;

  // Final population.
  {
    std::ofstream out(o.out_dir + "/population.csv");
    out << "tree_key,o1,o2,rank_metric\n";
    for (const Individual& ind : res.population)
      out << ind.tree.serialize() << "," << fmt_double(ind.fit.o1) << ","
          << fmt_double(ind.fit.o2) << "," << fmt_double(rank_metric(ind.fit, eps)) << "\n";
  }
  // Archive of every evaluation.
  {
    std::ofstream out(o.out_dir + "/archive.csv");
    out << "tree_key,ctx,o1,o2\n";
    for (const ArchiveEntry& e : res.archive)
      out << e.key << "," << e.ctx << "," << fmt_double(e.fit.o1) << ","
          << fmt_double(e.fit.o2) << "\n";
  }
  // Pareto front of the final population, most promising first.
  {
    std::vector<Fitness> fits;
    for (const Individual& ind : res.population) fits.push_back(ind.fit);
    const auto fronts = nsga2_fronts(fits);
    std::vector<int> front = fronts.empty() ? std::vector<int>{} : fronts.front();
    std::stable_sort(front.begin(), front.end(), [&](int a, int b) {
      const double ra = rank_metric(fits[a], eps), rb = rank_metric(fits[b], eps);
      if (ra != rb) return ra < rb;
      return res.population[a].tree.serialize() < res.population[b].tree.serialize();
    });
    std::ofstream out(o.out_dir + "/front.csv");
    out << "tree_key,t,obj2,rank_metric\n";
    std::set<std::string> seen;
    int written = 0;
    for (int idx : front) {
      if (written >= o.promising) break;
      const std::string key = res.population[idx].tree.serialize();
      if (!seen.insert(key).second) continue;
      out << key << "," << fmt_double(fits[idx].o1) << "," << fmt_double(fits[idx].o2)
          << "," << fmt_double(rank_metric(fits[idx], eps)) << "\n";
      write_tree_file(o.out_dir + "/front_" + std::to_string(written) + ".tree",
                      res.population[idx].tree, o.problem, fh.depth);
      ++written;
    }
  }
  std::cout << "evaluations: " << res.evaluator_invocations
            << "  population: " << res.population.size() << "  artifacts: " << o.out_dir
            << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& tree_path, RunOptions o, bool timed, int repeats,
                 std::ostream& out) {
  const TreeFile tf = read_tree_file(tree_path);
  if (!tf.problem.empty() && !o.problem.empty() && tf.problem != o.problem)
    throw std::invalid_argument("tree file is for problem `" + tf.problem +
                                "`, requested `" + o.problem + "`");
  if (o.problem.empty()) o.problem = tf.problem;
  if (o.problem.empty()) throw std::invalid_argument("no problem given (flag or tree header)");
  const int lvl = o.levels.empty() ? 0 : o.levels.front();
  const ProblemHandle h = make_problem(o.problem, lvl);
  if (tf.depth > 0 && tf.depth != h.depth)
    throw std::invalid_argument("tree file depth " + std::to_string(tf.depth) +
                                " does not match the problem's " + std::to_string(h.depth));
  const PrimitiveSet ps = generate_grammar(h.depth, grammar_config_for(h));
  const Program prog = compile_checked(tf.tree, ps);
  const double eps = o.epsilon > 0 ? o.epsilon : h.epsilon;
  const int max_iter = o.max_iter > 0 ? o.max_iter : (h.preconditioned ? 20000 : 100);
  const SolveReport rep = h.run(prog, eps, max_iter, repeats, timed);
  const Fitness f = fitness_of(rep, h.mode);
  out << "tree_key,level,n,t,rho,converged,rank_metric\n";
  out << tf.tree.serialize() << "," << h.l_max << "," << rep.n << ","
      << fmt_double(timed ? rep.t_wall : rep.t) << "," << fmt_double(rep.rho) << ","
      << (rep.converged ? 1 : 0) << "," << fmt_double(rank_metric(f, eps)) << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// render

std::string smoother_label(const Program& p, const Instr& in) {
  // find the inner smoothing operator of the correction expression
  for (int e = in.expr; e >= 0;) {
    const Expr& ex = p.exprs[e];
    if (ex.kind == Expr::Apply) {
      switch (ex.op.kind) {
        case OpKind::DiagInvDecoupled:
          return in.part == Partition::RedBlack ? "RB-GS" : "Jacobi";
        case OpKind::DiagInvCollective:
          return in.part == Partition::RedBlack ? "collective RB-GS" : "collective Jacobi";
        case OpKind::BlockInv: {
          std::string s = "block Jacobi ";
          for (int k = 0; k < kMaxDim; ++k)
            if (ex.op.shape[k] > 1 || k == 0)
              s += (k ? "x" : "") + std::to_string(ex.op.shape[k]);
          return s;
        }
        default:
          e = ex.a;
          continue;
      }
    }
    if (ex.kind == Expr::Sub) {
      e = ex.a;
      continue;
    }
    break;
  }
  return "update";
}

bool find_coarse_solve(const Program& p, int e, int* level) {
  if (e < 0) return false;
  const Expr& ex = p.exprs[e];
  if (ex.kind == Expr::Apply && ex.op.kind == OpKind::CoarseSolve) {
    *level = ex.op.level;
    return true;
  }
  if (ex.kind == Expr::Apply) return find_coarse_solve(p, ex.a, level);
  if (ex.kind == Expr::Sub)
    return find_coarse_solve(p, ex.a, level) || find_coarse_solve(p, ex.b, level);
  return false;
}

// A coarse-grid-correction update: x += w * P x_coarse.
bool is_cgc_update(const Program& p, const Instr& in) {
  const Expr& ex = p.exprs[in.expr];
  return ex.kind == Expr::Apply && ex.op.kind == OpKind::Prolong &&
         p.exprs[ex.a].kind == Expr::XRef;
}

int cmd_render(const std::string& tree_path, RunOptions o, std::ostream& out) {
  const TreeFile tf = read_tree_file(tree_path);
  if (o.problem.empty()) o.problem = tf.problem;
  const int depth = tf.depth > 0 ? tf.depth
                    : !o.problem.empty() ? make_problem(o.problem, 0).depth
                                         : 5;
  GrammarConfig gcfg;
  if (!o.problem.empty()) gcfg = grammar_config_for(make_problem(o.problem, 0));
  const PrimitiveSet ps = generate_grammar(depth, gcfg);
  const Program prog = compile_checked(tf.tree, ps);

  struct Node {
    int id, level;
    std::string label;
    bool solver;
  };
  std::vector<Node> nodes;
  struct Edge {
    int from, to;
    std::string label;
  };
  std::vector<Edge> edges;
  int prev = -1;
  std::string pending_label;
  for (const Instr& in : prog.instrs) {
    if (in.kind == Instr::Coarsen) continue;
    if (is_cgc_update(prog, in)) {
      // correction transport: annotate the next edge with its weight
      pending_label = "w=" + detail::format_omega(omega_of(in.omega_idx));
      continue;
    }
    int solve_level = -1;
    Node n;
    n.id = static_cast<int>(nodes.size());
    if (find_coarse_solve(prog, in.expr, &solve_level)) {
      n.level = solve_level;
      n.label = "solve";
      n.solver = true;
    } else {
      n.level = in.level;
      n.label = smoother_label(prog, in) + " w=" + detail::format_omega(omega_of(in.omega_idx));
      n.solver = false;
    }
    if (prev >= 0) {
      edges.push_back({prev, n.id, pending_label});
      pending_label.clear();
    }
    prev = n.id;
    nodes.push_back(std::move(n));
  }

  out << "digraph solver {\n";
  out << "  node [shape=circle, style=filled, fillcolor=white];\n";
  int max_level = 0;
  for (const Node& n : nodes) max_level = std::max(max_level, n.level);
  for (int l = 0; l <= max_level; ++l) {
    out << "  lvl_" << detail::level_name(l) << " [label=\"" << detail::level_name(l)
        << "\", shape=plaintext, style=\"\"];\n";
    if (l > 0)
      out << "  lvl_" << detail::level_name(l - 1) << " -> lvl_" << detail::level_name(l)
          << " [style=invis];\n";
  }
  for (const Node& n : nodes) {
    out << "  u" << n.id << " [label=\"" << n.label << "\"";
    if (n.solver) out << ", fillcolor=black, fontcolor=white";
    out << "];\n";
  }
  for (const Edge& e : edges) {
    out << "  u" << e.from << " -> u" << e.to;
    if (!e.label.empty()) out << " [label=\"" << e.label << "\"]";
    out << ";\n";
  }
  for (int l = 0; l <= max_level; ++l) {
    out << "  { rank=same; lvl_" << detail::level_name(l) << ";";
    for (const Node& n : nodes)
      if (n.level == l) out << " u" << n.id << ";";
    out << " }\n";
  }
  out << "}\n";
  return 0;
}

// --------------------------------------------------------------------------
// bench

struct CycleSpec {
  CycleKind kind;
  int nu1, nu2;
  std::string text;
};

CycleSpec parse_cycle(const std::string& text) {
  static const std::regex re(R"(^([VWF])\((\d+),(\d+)\)$)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw std::invalid_argument("bad cycle spec (want e.g. V(2,2)): " + text);
  CycleSpec c;
  c.kind = m[1] == "V" ? CycleKind::V : m[1] == "W" ? CycleKind::W : CycleKind::F;
  c.nu1 = std::stoi(m[2]);
  c.nu2 = std::stoi(m[3]);
  c.text = text;
  return c;
}

int cmd_bench(RunOptions o, const std::vector<std::string>& cycles, double omega,
              const std::string& smoother, bool timed, int repeats, std::ostream& out) {
  out << "cycle,n,t,t_wall,rho,converged\n";
  if (cycles.empty()) return 0;
  const int lvl = o.levels.empty() ? 0 : o.levels.front();
  const ProblemHandle h = make_problem(o.problem, lvl);
  const double eps = o.epsilon > 0 ? o.epsilon : h.epsilon;
  const int max_iter = o.max_iter > 0 ? o.max_iter : (h.preconditioned ? 20000 : 100);
  SmootherKind sk = SmootherKind::RBGaussSeidel;
  if (smoother == "jacobi")
    sk = SmootherKind::JacobiPointwise;
  else if (smoother == "rbgs")
    sk = SmootherKind::RBGaussSeidel;
  else if (smoother == "cjacobi")
    sk = SmootherKind::JacobiCollective;
  else
    throw std::invalid_argument("unknown smoother: " + smoother);
  for (const std::string& text : cycles) {
    const CycleSpec c = parse_cycle(text);
    const Program prog =
        reference_cycle(h.depth, h.components, c.kind, c.nu1, c.nu2, sk, omega_index_of(omega));
    const SolveReport rep = h.run(prog, eps, max_iter, repeats, timed);
    out << c.text << "," << rep.n << "," << fmt_double(rep.t) << ","
        << fmt_double(rep.t_wall) << "," << fmt_double(rep.rho) << ","
        << (rep.converged ? 1 : 0) << "\n";
  }
  return 0;
}

// Worker pinning policy: forwarded to the OpenMP runtime unless the user
// already pinned explicitly.
void apply_pinning_policy() {
  const char* policy = std::getenv("MGS_WORKER_PINNING");
  if (!policy || std::getenv("OMP_PROC_BIND")) return;
  const std::string p = policy;
  if (p == "compact")
    setenv("OMP_PROC_BIND", "close", 0);
  else if (p == "scatter")
    setenv("OMP_PROC_BIND", "spread", 0);
  else if (p != "none")
    std::cerr << "warning: unknown MGS_WORKER_PINNING policy `" << p << "` ignored\n";
}

}  // namespace

int main(int argc, char** argv) {
  apply_pinning_policy();
  CLI::App app{"Grammar-based multigrid solver synthesis"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string config_path, levels_text, tree_path, out_path;
  bool timed = false;
  int repeats = 3;
  double omega = 1.15;
  std::string smoother = "rbgs";
  std::vector<std::string> cycles;

  auto add_common = [&](CLI::App* cmd, bool with_problem) {
    if (with_problem)
      cmd->add_option("--problem", opt.problem,
                      "poisson2d | poisson3d | elasticity2d | helmholtz2d");
    cmd->add_option("--levels", levels_text, "finest level l_max (evolve: comma schedule)");
    cmd->add_option("--epsilon", opt.epsilon, "residual reduction target override");
    cmd->add_option("--max-iter", opt.max_iter, "iteration cap override");
    return cmd;
  };

  CLI::App* evolve_cmd = add_common(app.add_subcommand("evolve", "run the search"), true);
  evolve_cmd->add_option("--config", config_path, "flat key=value settings file");
  evolve_cmd->add_option("--seed", opt.sc.seed, "run seed");
  evolve_cmd->add_option("--workers", opt.sc.workers, "evaluation threads");
  evolve_cmd->add_option("--generations", opt.sc.generations, "generation count");
  evolve_cmd->add_option("--mu", opt.sc.mu, "parent population size");
  evolve_cmd->add_option("--lambda", opt.sc.lambda, "children per generation");
  evolve_cmd->add_option("--initial-population", opt.sc.initial_population,
                         "random trees in generation 0");
  evolve_cmd->add_option("--generalization-interval", opt.sc.generalization_interval,
                         "generations per schedule step");
  evolve_cmd->add_option("--promising", opt.promising, "front cut size");
  evolve_cmd->add_option("--out", opt.out_dir, "artifact directory");
  evolve_cmd->add_option("--resume", opt.resume_path, "checkpoint file to resume from");
  evolve_cmd->add_flag("--random-search", opt.sc.random_search, "baseline search mode");

  CLI::App* eval_cmd = add_common(app.add_subcommand("evaluate", "run one tree"), true);
  eval_cmd->add_option("tree", tree_path, "tree file")->required();
  eval_cmd->add_flag("--timed", timed, "measure wall time (with warm-up)");
  eval_cmd->add_option("--repeats", repeats, "timed solve repetitions");
  eval_cmd->add_option("--out", out_path, "write the report CSV here instead of stdout");

  CLI::App* render_cmd = app.add_subcommand("render", "emit a DOT diagram for a tree");
  render_cmd->add_option("tree", tree_path, "tree file")->required();
  render_cmd->add_option("--problem", opt.problem, "problem context (optional)");
  render_cmd->add_option("--out", out_path, "write the diagram here instead of stdout");

  CLI::App* bench_cmd = add_common(app.add_subcommand("bench", "reference cycles"), true);
  bench_cmd->add_option("cycles", cycles, "cycle specs, e.g. V(1,1) W(2,2)");
  bench_cmd->add_option("--omega", omega, "relaxation factor");
  bench_cmd->add_option("--smoother", smoother, "jacobi | rbgs | cjacobi");
  bench_cmd->add_flag("--timed", timed, "measure wall time");
  bench_cmd->add_option("--repeats", repeats, "timed solve repetitions");
  bench_cmd->add_option("--out", out_path, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    // precedence: problem defaults < config file < command-line flags
    if (app.got_subcommand(evolve_cmd)) {
      RunOptions resolved;
      resolved.problem = opt.problem;
      std::map<std::string, std::string> kv;
      if (!config_path.empty()) kv = parse_config_file(config_path);
      if (auto it = kv.find("problem"); it != kv.end() && resolved.problem.empty())
        resolved.problem = it->second;
      if (resolved.problem.empty())
        throw std::invalid_argument("evolve needs --problem (flag or config)");
      apply_problem_defaults(resolved);
      apply_config_map(kv, resolved);
      resolved.problem = opt.problem.empty() ? resolved.problem : opt.problem;
      for (const std::string& flag :
           {"--levels", "--epsilon", "--max-iter", "--seed", "--workers", "--generations",
            "--mu", "--lambda", "--initial-population", "--generalization-interval",
            "--promising", "--out", "--resume", "--random-search"}) {
        if (!evolve_cmd->count(flag)) continue;
        if (flag == "--levels") resolved.levels = parse_levels(levels_text);
        else if (flag == "--epsilon") resolved.epsilon = opt.epsilon;
        else if (flag == "--max-iter") resolved.max_iter = opt.max_iter;
        else if (flag == "--seed") resolved.sc.seed = opt.sc.seed;
        else if (flag == "--workers") resolved.sc.workers = opt.sc.workers;
        else if (flag == "--generations") resolved.sc.generations = opt.sc.generations;
        else if (flag == "--mu") resolved.sc.mu = opt.sc.mu;
        else if (flag == "--lambda") resolved.sc.lambda = opt.sc.lambda;
        else if (flag == "--initial-population")
          resolved.sc.initial_population = opt.sc.initial_population;
        else if (flag == "--generalization-interval")
          resolved.sc.generalization_interval = opt.sc.generalization_interval;
        else if (flag == "--promising") resolved.promising = opt.promising;
        else if (flag == "--out") resolved.out_dir = opt.out_dir;
        else if (flag == "--resume") resolved.resume_path = opt.resume_path;
        else if (flag == "--random-search") resolved.sc.random_search = opt.sc.random_search;
      }
      if (resolved.sc.mu <= 0 || resolved.sc.lambda <= 0 || resolved.sc.generations < 0 ||
          resolved.sc.workers <= 0)
        throw std::invalid_argument("mu, lambda, workers must be positive; generations >= 0");
      return cmd_evolve(std::move(resolved));
    }
    if (!levels_text.empty()) opt.levels = parse_levels(levels_text);
    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      file_out.open(out_path);
      if (!file_out) throw std::runtime_error("cannot write " + out_path);
      out = &file_out;
    }
    if (app.got_subcommand(eval_cmd))
      return cmd_evaluate(tree_path, std::move(opt), timed, repeats, *out);
    if (app.got_subcommand(render_cmd)) return cmd_render(tree_path, std::move(opt), *out);
    if (app.got_subcommand(bench_cmd)) {
      if (opt.problem.empty()) throw std::invalid_argument("bench needs --problem");
      return cmd_bench(std::move(opt), cycles, omega, smoother, timed, repeats, *out);
    }
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
