#include "mgs/grammar.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <sstream>
#include <stdexcept>

namespace mgs {

namespace {

std::string lvl(int i) { return detail::level_name(i); }

TypeTag s_tag(int i, bool g) { return {"s_" + lvl(i), g}; }
TypeTag c_tag(int i, bool g) { return {"c_" + lvl(i), g}; }
TypeTag e_tag(int i, bool g) { return {"e_" + lvl(i), g}; }
TypeTag b_tag(int i) { return {"B_" + lvl(i), false}; }
TypeTag w_tag() { return {"w", false}; }
TypeTag p_tag() { return {"P", false}; }

void add(PrimitiveSet& ps, Production p) {
  ps.prods.push_back(std::move(p));
}

}  // namespace

PrimitiveSet generate_grammar(int depth, const GrammarConfig& cfg) {
  if (depth < 2) throw std::invalid_argument("generate_grammar: depth must be >= 2");
  PrimitiveSet ps;
  ps.depth = depth;
  ps.start = s_tag(0, false);

  const int lowest_state = depth - 2;  // coarsest level carrying a state
  const int coarsest = depth - 1;

  // Shared terminals: relaxation factors and partitionings.
  std::vector<int> omegas = cfg.omega_indices;
  if (omegas.empty())
    for (int i = 0; i <= kOmegaIndexMax; ++i) omegas.push_back(i);
  for (int idx : omegas) {
    Production p;
    p.name = "w" + std::to_string(idx);
    p.out = w_tag();
    p.sem = Sem::OmegaTerm;
    p.omega_idx = idx;
    add(ps, p);
  }
  {
    Production p;
    p.name = "p_none";
    p.out = p_tag();
    p.sem = Sem::PartTerm;
    p.part = Partition::None;
    add(ps, p);
    p.name = "p_rb";
    p.part = Partition::RedBlack;
    add(ps, p);
  }

  // Initial state: the only state-typed terminal, guarded.
  {
    Production p;
    p.name = "init";
    p.out = s_tag(0, true);
    p.sem = Sem::InitTerm;
    add(ps, p);
  }

  for (int i = 0; i <= lowest_state; ++i) {
    // Smoother-operator menu for this level.
    {
      Production p;
      p.out = b_tag(i);
      p.sem = Sem::SmootherTerm;
      p.level = i;
      p.name = "jac_" + lvl(i);
      p.bop = OpKind::DiagInvDecoupled;
      add(ps, p);
      if (cfg.components > 1 && cfg.collective_jacobi) {
        p.name = "cjac_" + lvl(i);
        p.bop = OpKind::DiagInvCollective;
        add(ps, p);
      }
      for (const auto& sh : cfg.block_shapes) {
        std::string n = "bj";
        for (int k = 0; k < kMaxDim; ++k)
          if (sh[k] > 1 || k == 0) n += (k ? "x" : "") + std::to_string(sh[k]);
        p.name = n + "_" + lvl(i);
        p.bop = OpKind::BlockInv;
        p.shape = sh;
        add(ps, p);
      }
    }

    for (bool g : {false, true}) {
      // s_i -> update(w, P, apply(B_i, c_i))
      {
        Production p;
        p.name = "smooth_" + lvl(i);
        p.out = s_tag(i, g);
        p.in = {w_tag(), p_tag(), b_tag(i), c_tag(i, g)};
        p.sem = Sem::Smooth;
        p.level = i;
        add(ps, p);
      }
      // c_i -> residual(A_i, s_i)
      {
        Production p;
        p.name = "residual_" + lvl(i);
        p.out = c_tag(i, g);
        p.in = {s_tag(i, g)};
        p.sem = Sem::Residual;
        p.level = i;
        add(ps, p);
      }
      if (i < lowest_state) {
        // s_i -> update(w, cgc(I, s_{i+1}))
        {
          Production p;
          p.name = "cgc_" + lvl(i);
          p.out = s_tag(i, g);
          p.in = {w_tag(), s_tag(i + 1, g)};
          p.sem = Sem::Cgc;
          p.level = i;
          add(ps, p);
        }
        // c_{i+1} -> coarsening(A_{i+1}, 0, apply(R_i, c_i))
        {
          Production p;
          p.name = "coarsen_" + lvl(i + 1);
          p.out = c_tag(i + 1, g);
          p.in = {c_tag(i, g)};
          p.sem = Sem::Coarsen;
          p.level = i;
          add(ps, p);
        }
      }
    }
  }

  // Coarsest-level solver: c_coarsest -> apply(A^-1, apply(R, c)); exists
  // guarded only, since the solver update below always demands a guarded
  // solve chain.
  {
    Production p;
    p.name = "solve_" + lvl(coarsest);
    p.out = c_tag(coarsest, true);
    p.in = {c_tag(lowest_state, true)};
    p.sem = Sem::SolveChain;
    p.level = lowest_state;
    add(ps, p);
  }
  // s_lowest -> update(w, apply(P, c_coarsest)).  The unguarded-output
  // version is the unique guard transition; the guarded version permits
  // additional solver applications below the transition point.
  for (bool g : {false, true}) {
    Production p;
    p.name = "cgs_update_" + lvl(lowest_state);
    p.out = s_tag(lowest_state, g);
    p.in = {w_tag(), c_tag(coarsest, true)};
    p.sem = Sem::SolveUpdate;
    p.level = lowest_state;
    add(ps, p);
  }

  // Early-solve extension: exact solves on intermediate levels.
  if (cfg.early_solve) {
    for (int i = 0; i + 1 <= lowest_state; ++i) {
      for (bool g : {false, true}) {
        {
          Production p;
          p.name = "esolve_" + lvl(i + 1);
          p.out = e_tag(i + 1, g);
          p.in = {c_tag(i, g)};
          p.sem = Sem::EarlyChain;
          p.level = i;
          add(ps, p);
        }
        {
          Production p;
          p.name = "eupdate_" + lvl(i);
          p.out = s_tag(i, g);
          p.in = {w_tag(), e_tag(i + 1, g)};
          p.sem = Sem::EarlyUpdate;
          p.level = i;
          add(ps, p);
        }
      }
    }
  }

  // Lookup tables.
  for (int id = 0; id < static_cast<int>(ps.prods.size()); ++id) {
    const Production& p = ps.prods[id];
    ps.alternatives[p.out].push_back(id);
    auto key = std::make_pair(p.name, p.out);
    if (ps.by_name_out.count(key))
      throw std::logic_error("generate_grammar: ambiguous production " + p.name);
    ps.by_name_out[key] = id;
  }

  // Minimal derivation depth per type (fixpoint).
  constexpr int kInf = 1 << 20;
  for (const auto& [tag, ids] : ps.alternatives) ps.min_depth[tag] = kInf;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [tag, ids] : ps.alternatives) {
      int best = ps.min_depth[tag];
      for (int id : ids) {
        const Production& p = ps.prods[id];
        int d = 1;
        for (const TypeTag& t : p.in) {
          auto it = ps.min_depth.find(t);
          const int md = it == ps.min_depth.end() ? kInf : it->second;
          d = std::max(d, md >= kInf ? kInf : 1 + md);
        }
        best = std::min(best, d);
      }
      if (best < ps.min_depth[tag]) {
        ps.min_depth[tag] = best;
        changed = true;
      }
    }
  }
  if (ps.min_depth.at(ps.start) >= kInf)
    throw std::logic_error("generate_grammar: start type cannot be derived");
  return ps;
}

// --- Trees ------------------------------------------------------------------

std::string DerivationTree::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

DerivationTree DerivationTree::deserialize(const std::string& text) {
  DerivationTree t;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) t.tokens.push_back(tok);
  return t;
}

namespace {

struct Checker {
  const DerivationTree& tree;
  const PrimitiveSet& ps;
  TreeInfo info;
  std::size_t pos = 0;

  bool walk(const TypeTag& expected, int depth) {
    if (pos >= tree.tokens.size()) {
      info.diagnostic = "unexpected end of token stream (token index " +
                        std::to_string(pos) + ")";
      return false;
    }
    const std::size_t at = pos++;
    auto it = ps.by_name_out.find({tree.tokens[at], expected});
    if (it == ps.by_name_out.end()) {
      info.diagnostic = "token " + std::to_string(at) + " ('" + tree.tokens[at] +
                        "') does not produce type " + expected.id +
                        (expected.guard ? "!" : "");
      return false;
    }
    const Production& p = ps.prods[it->second];
    info.prod[at] = it->second;
    info.tag[at] = expected;
    info.depth[at] = depth;
    info.height = std::max(info.height, depth);
    for (const TypeTag& t : p.in)
      if (!walk(t, depth + 1)) return false;
    info.subtree[at] = static_cast<int>(pos - at);
    return true;
  }
};

}  // namespace

TreeInfo type_check(const DerivationTree& tree, const PrimitiveSet& pset) {
  Checker ck{tree, pset, {}, 0};
  const std::size_t n = tree.tokens.size();
  ck.info.prod.assign(n, -1);
  ck.info.tag.assign(n, {});
  ck.info.subtree.assign(n, 0);
  ck.info.depth.assign(n, 0);
  if (n == 0) {
    ck.info.diagnostic = "empty tree";
    return ck.info;
  }
  if (!ck.walk(pset.start, 1)) return ck.info;
  if (ck.pos != n) {
    ck.info.diagnostic = "trailing tokens at index " + std::to_string(ck.pos);
    return ck.info;
  }
  ck.info.ok = true;
  return ck.info;
}

namespace {

using Value = std::variant<State, int, Partition, OpRef>;

struct Compiler {
  const DerivationTree& tree;
  const PrimitiveSet& ps;
  const TreeInfo& info;
  IRBuilder& ir;

  Value eval(int at) {
    const Production& p = ps.prods[info.prod[at]];
    std::vector<Value> kids;
    int child = at + 1;
    for (std::size_t k = 0; k < p.in.size(); ++k) {
      kids.push_back(eval(child));
      child += info.subtree[child];
    }
    switch (p.sem) {
      case Sem::InitTerm:
        return ir.initial_state();
      case Sem::OmegaTerm:
        return p.omega_idx;
      case Sem::PartTerm:
        return p.part;
      case Sem::SmootherTerm:
        return OpRef{p.bop, p.level, p.shape};
      case Sem::Smooth: {
        const int w = std::get<int>(kids[0]);
        const Partition part = std::get<Partition>(kids[1]);
        const OpRef b = std::get<OpRef>(kids[2]);
        State s = std::get<State>(kids[3]);
        s = ir.mk_apply(b, s);
        return ir.mk_update(w, part, s);
      }
      case Sem::Cgc: {
        const int w = std::get<int>(kids[0]);
        State s = ir.mk_cgc(std::get<State>(kids[1]));
        return ir.mk_update(w, Partition::None, s);
      }
      case Sem::Residual:
        return ir.mk_residual(std::get<State>(kids[0]));
      case Sem::Coarsen: {
        State s = ir.mk_apply({OpKind::Restrict, p.level}, std::get<State>(kids[0]));
        return ir.mk_coarsening(s);
      }
      case Sem::SolveChain:
      case Sem::EarlyChain: {
        State s = ir.mk_apply({OpKind::Restrict, p.level}, std::get<State>(kids[0]));
        return ir.mk_apply({OpKind::CoarseSolve, p.level + 1}, s);
      }
      case Sem::SolveUpdate:
      case Sem::EarlyUpdate: {
        const int w = std::get<int>(kids[0]);
        State s = ir.mk_apply({OpKind::Prolong, p.level + 1}, std::get<State>(kids[1]));
        return ir.mk_update(w, Partition::None, s);
      }
    }
    throw std::logic_error("compile: bad production semantics");
  }
};

}  // namespace

Program compile_tree(const DerivationTree& tree, const PrimitiveSet& pset) {
  TreeInfo info = type_check(tree, pset);
  if (!info.ok) throw std::logic_error("compile: tree does not type-check: " + info.diagnostic);
  IRBuilder ir(pset.depth);
  Compiler c{tree, pset, info, ir};
  State final_state = std::get<State>(c.eval(0));
  return ir.generate_program(final_state);
}

CountResult count_lower_bound(int n, int i_min, int i_max) {
  namespace mp = boost::multiprecision;
  if (n < 1 || i_min < 0 || i_min > i_max)
    throw std::invalid_argument("count_lower_bound: invalid arguments");
  const mp::cpp_int base = 3 * n;
  mp::cpp_int total = 0;
  mp::cpp_int term = mp::pow(base, static_cast<unsigned>(i_min));
  for (int i = i_min; i <= i_max; ++i) {
    total += term;
    term *= base;
  }
  CountResult r;
  r.decimal = total.str();
  r.approx = total.convert_to<double>();
  return r;
}

}  // namespace mgs
