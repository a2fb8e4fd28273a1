// Typed context-free grammar over the state-transition functions.
//
// Variables exist per hierarchy level: s_* (states whose correction was
// consumed), c_* (states carrying a correction), B_* (smoother operators),
// plus the relaxation-factor and partitioning terminals.  State variables
// carry a guard flag; the only transition from an unguarded to a guarded
// type is the update-with-coarse-grid-solver production, so every complete
// derivation applies the coarse-grid solver at least once (it is also
// provided guarded-to-guarded, allowing multiple solver applications).
//
// Production and terminal names encode the level symbolically (h, 2h, ...),
// so a tree compiles against any primitive set of the same depth; this is
// the mechanism behind problem-size generalization.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mgs/ir.hpp"

namespace mgs {

struct TypeTag {
  std::string id;
  bool guard = false;
  auto operator<=>(const TypeTag&) const = default;
};

// Semantic payload executed during compilation to IR.
enum class Sem {
  InitTerm,     // initial state (x0, b, -, -)
  OmegaTerm,    // relaxation-factor index
  PartTerm,     // partitioning choice
  SmootherTerm, // B operator selector
  Smooth,       // s -> update(w, P, apply(B, c))
  Cgc,          // s -> update(w, cgc(s_coarser))
  Residual,     // c -> residual(A, s)
  Coarsen,      // c_H -> coarsening(A_H, 0, apply(R, c_h))
  SolveChain,   // c_coarsest -> apply(A^-1, apply(R, c))
  SolveUpdate,  // s -> update(w, apply(P, c_coarsest))   [guard transition]
  EarlyChain,   // intermediate-level solve chain
  EarlyUpdate,  // intermediate-level solve update
};

struct Production {
  std::string name;
  TypeTag out;
  std::vector<TypeTag> in;  // empty = terminal
  Sem sem = Sem::InitTerm;
  int level = 0;            // state level the semantics act on
  int omega_idx = 18;       // OmegaTerm
  Partition part = Partition::None;   // PartTerm
  OpKind bop = OpKind::DiagInvDecoupled;  // SmootherTerm
  std::array<int, kMaxDim> shape{1, 1, 1};

  bool terminal() const { return in.empty(); }
};

struct GrammarConfig {
  int components = 1;
  bool collective_jacobi = false;         // offer the collective variant (systems)
  std::vector<std::array<int, kMaxDim>> block_shapes;  // block-Jacobi menu
  std::vector<int> omega_indices;         // default: full table 0..36
  bool early_solve = true;                // intermediate-level solves
};

struct PrimitiveSet {
  int depth = 2;  // number of grids
  TypeTag start;  // unguarded finest-level state
  std::vector<Production> prods;
  std::map<TypeTag, std::vector<int>> alternatives;  // tag -> production ids
  std::map<std::pair<std::string, TypeTag>, int> by_name_out;
  std::map<TypeTag, int> min_depth;  // minimal derivation depth per tag

  const Production& prod(int id) const { return prods[id]; }
};

PrimitiveSet generate_grammar(int depth, const GrammarConfig& cfg);

// --- Derivation trees -------------------------------------------------------

struct DerivationTree {
  std::vector<std::string> tokens;  // depth-first production/terminal names

  std::string serialize() const;
  static DerivationTree deserialize(const std::string& text);
  int size() const { return static_cast<int>(tokens.size()); }
};

// Per-node annotations recovered by the type checker.
struct TreeInfo {
  bool ok = false;
  std::string diagnostic;
  std::vector<int> prod;      // production id per node
  std::vector<TypeTag> tag;   // resolved type per node
  std::vector<int> subtree;   // subtree size (tokens) per node
  std::vector<int> depth;     // node depth, root = 1
  int height = 0;
};

TreeInfo type_check(const DerivationTree& tree, const PrimitiveSet& pset);

// Compiles a type-correct tree into the IR and returns the linearized
// program.  Throws std::logic_error for trees that do not type-check.
Program compile_tree(const DerivationTree& tree, const PrimitiveSet& pset);

// Search-space size estimate sum_{i=i_min}^{i_max} (3n)^i as a decimal
// string (extended precision) plus a double approximation.
struct CountResult {
  std::string decimal;
  double approx = 0.0;
};
CountResult count_lower_bound(int n, int i_min, int i_max);

}  // namespace mgs
