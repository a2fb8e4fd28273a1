// Solver intermediate representation.
//
// A multigrid method is built as a chain of states (x, b, c, predecessor)
// threaded through five transition functions (residual, apply, update,
// coarsening, coarse-grid correction).  The resulting expression DAG is
// linearized by generate_program into an instruction list in which every
// approximate-solution and right-hand-side version is assigned exactly
// once; the executor interprets that list against an operator hierarchy.
#pragma once

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgs/smoother.hpp"

namespace mgs {

enum class OpKind {
  A,                  // system operator of the level
  DiagInvDecoupled,   // D^{-1}, per-component diagonal
  DiagInvCollective,  // D^{-1}, pointwise component block
  BlockInv,           // blockdiag(A)^{-1} with rectangular blocks
  Restrict,           // level l -> l+1 (input level stored)
  Prolong,            // level l -> l-1 (input level stored)
  CoarseSolve,        // Krylov solve of A_l on level l
};

struct OpRef {
  OpKind kind = OpKind::A;
  int level = 0;  // level of the operand field
  std::array<int, kMaxDim> shape{1, 1, 1};  // BlockInv only
};

// Level of the result of applying op to a field on op.level.
inline int op_output_level(const OpRef& op) {
  if (op.kind == OpKind::Restrict) return op.level + 1;
  if (op.kind == OpKind::Prolong) return op.level - 1;
  return op.level;
}

struct Expr {
  enum Kind { XRef, BRef, Sub, Apply } kind = Sub;
  int level = 0;
  int a = -1, b = -1;  // Sub operands / Apply child in `a`
  OpRef op{};
  int node = -1;  // XRef / BRef target
};

struct XNode {
  enum Kind { Input, Zero, Update } kind = Input;
  int level = 0;
  int prev = -1;       // Update
  int cexpr = -1;      // Update correction expression
  int omega_idx = 18;  // Update relaxation index
  Partition part = Partition::None;
  int companion_b = -1;  // Zero: coarsening b node created alongside
};

struct BNode {
  enum Kind { Input, Coarsen } kind = Input;
  int level = 0;
  int expr = -1;   // Coarsen: restricted right-hand-side expression
  int xzero = -1;  // Coarsen: companion zero x node
};

struct Instr {
  enum Kind { Coarsen, Update } kind = Update;
  int level = 0;
  int expr = -1;  // Coarsen: value of b[level]; Update: correction
  int omega_idx = 18;
  Partition part = Partition::None;
  int xnode = -1, bnode = -1;  // assigned versions (rendering)
  int base_x = -1;             // Update: previous x version (rendering)
};

struct Program {
  std::vector<Expr> exprs;
  std::vector<XNode> xnodes;
  std::vector<BNode> bnodes;
  std::vector<Instr> instrs;
  int num_levels = 1;  // relative levels touched, finest = 0
};

// One solver state: expression references plus the predecessor chain.
// The predecessor is empty exactly on the finest level.
struct State {
  int x = -1;
  int b = -1;
  int c = -1;  // expression id, -1 = empty
  int level = 0;
  std::shared_ptr<const State> pred;
};

// Arena + transition functions.  All mk_* functions are pure with respect
// to the passed state (arenas only grow).
class IRBuilder {
 public:
  explicit IRBuilder(int num_levels) : num_levels_(num_levels) {
    if (num_levels < 2) throw std::invalid_argument("IRBuilder: need at least 2 levels");
  }

  int num_levels() const { return num_levels_; }

  State initial_state() {
    State s;
    s.level = 0;
    s.x = add_x({XNode::Input, 0});
    s.b = add_b({BNode::Input, 0});
    return s;
  }

  // c <- b - A x
  State mk_residual(const State& s) {
    require(s.c < 0, "mk_residual: correction already set");
    State r = s;
    const int ax = apply_e({OpKind::A, s.level}, xref(s.x));
    r.c = sub_e(bref(s.b), ax);
    return r;
  }

  // c <- B c
  State mk_apply(const OpRef& op, const State& s) {
    require(s.c >= 0, "mk_apply: missing correction");
    State r = s;
    r.c = apply_e(op, s.c);
    return r;
  }

  // x <- x + omega c under the partition; c cleared.
  State mk_update(int omega_idx, Partition part, const State& s) {
    require(s.c >= 0, "mk_update: missing correction");
    require(exprs_[s.c].level == s.level, "mk_update: correction on wrong level");
    State r = s;
    XNode n{XNode::Update, s.level};
    n.prev = s.x;
    n.cexpr = s.c;
    n.omega_idx = omega_idx;
    n.part = part;
    r.x = add_x(n);
    r.c = -1;
    return r;
  }

  // New coarse state: x = 0, b = c, c = b - A_coarse * 0; predecessor keeps
  // the fine state with its correction consumed.
  State mk_coarsening(const State& s) {
    require(s.c >= 0, "mk_coarsening: missing correction");
    require(exprs_[s.c].level == s.level + 1, "mk_coarsening: correction not restricted");
    const int lvl = s.level + 1;
    require(lvl < num_levels_, "mk_coarsening: below coarsest state level");
    State fine = s;
    fine.c = -1;

    const int bid = add_b({BNode::Coarsen, lvl, s.c, -1});
    XNode zx{XNode::Zero, lvl};
    zx.companion_b = bid;
    const int xid = add_x(zx);
    bnodes_[bid].xzero = xid;

    State r;
    r.level = lvl;
    r.x = xid;
    r.b = bid;
    r.pred = std::make_shared<const State>(fine);
    const int ax = apply_e({OpKind::A, lvl}, xref(xid));
    r.c = sub_e(bref(bid), ax);
    return r;
  }

  // Coarse-grid correction: restore the predecessor's (x, b), set
  // c = P * (coarse x).
  State mk_cgc(const State& s) {
    require(s.pred != nullptr, "mk_cgc: missing predecessor");
    require(s.c < 0, "mk_cgc: coarse correction not consumed");
    State r = *s.pred;
    r.c = apply_e({OpKind::Prolong, s.level}, xref(s.x));
    return r;
  }

  // c <- P * solve(A_coarsest, R * c); the composition of the paired
  // restriction / inverse / prolongation applications.
  State mk_coarse_grid_solver(const State& s) {
    require(s.c >= 0, "mk_coarse_grid_solver: missing correction");
    const int lvl = exprs_[s.c].level;
    State r = mk_apply({OpKind::Restrict, lvl}, s);
    r = mk_apply({OpKind::CoarseSolve, lvl + 1}, r);
    return mk_apply({OpKind::Prolong, lvl + 1}, r);
  }

  // Linearizes the DAG reachable from the final state.  Shared x/b versions
  // are emitted exactly once, in dependency order.
  Program generate_program(const State& final_state) const {
    require(final_state.level == 0, "generate_program: final state not on finest level");
    require(final_state.c < 0, "generate_program: unconsumed correction");
    Program p;
    p.exprs = exprs_;
    p.xnodes = xnodes_;
    p.bnodes = bnodes_;
    p.num_levels = num_levels_;
    std::vector<char> xdone(xnodes_.size(), 0), bdone(bnodes_.size(), 0);
    emit_x(final_state.x, p, xdone, bdone);
    return p;
  }

  const Expr& expr(int id) const { return exprs_[id]; }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw std::logic_error(msg);
  }

  int xref(int xid) {
    return add_ref(Expr{Expr::XRef, xnodes_[xid].level, -1, -1, {}, xid});
  }
  int bref(int bid) {
    return add_ref(Expr{Expr::BRef, bnodes_[bid].level, -1, -1, {}, bid});
  }
  int sub_e(int a, int b) {
    require(exprs_[a].level == exprs_[b].level, "sub: level mismatch");
    exprs_.push_back(Expr{Expr::Sub, exprs_[a].level, a, b, {}, -1});
    return static_cast<int>(exprs_.size()) - 1;
  }
  int apply_e(const OpRef& op, int child) {
    require(exprs_[child].level == op.level, "apply: operand level mismatch");
    exprs_.push_back(Expr{Expr::Apply, op_output_level(op), child, -1, op, -1});
    return static_cast<int>(exprs_.size()) - 1;
  }

  int add_ref(const Expr& e) {
    for (int i = 0; i < static_cast<int>(exprs_.size()); ++i)
      if (exprs_[i].kind == e.kind && exprs_[i].node == e.node) return i;
    exprs_.push_back(e);
    return static_cast<int>(exprs_.size()) - 1;
  }
  int add_x(const XNode& n) {
    xnodes_.push_back(n);
    return static_cast<int>(xnodes_.size()) - 1;
  }
  int add_b(const BNode& n) {
    bnodes_.push_back(n);
    return static_cast<int>(bnodes_.size()) - 1;
  }

  void emit_expr(int e, Program& p, std::vector<char>& xd, std::vector<char>& bd) const {
    const Expr& ex = exprs_[e];
    switch (ex.kind) {
      case Expr::XRef:
        emit_x(ex.node, p, xd, bd);
        break;
      case Expr::BRef:
        emit_b(ex.node, p, xd, bd);
        break;
      case Expr::Sub:
        emit_expr(ex.a, p, xd, bd);
        emit_expr(ex.b, p, xd, bd);
        break;
      case Expr::Apply:
        emit_expr(ex.a, p, xd, bd);
        break;
    }
  }

  void emit_x(int id, Program& p, std::vector<char>& xd, std::vector<char>& bd) const {
    if (xd[id]) return;
    const XNode& n = xnodes_[id];
    if (n.kind == XNode::Input) {
      xd[id] = 1;
      return;
    }
    if (n.kind == XNode::Zero) {
      // assigned by the companion coarsening instruction
      emit_b(n.companion_b, p, xd, bd);
      xd[id] = 1;
      return;
    }
    xd[id] = 1;  // break residual self-references through the buffer model
    emit_x(n.prev, p, xd, bd);
    emit_expr(n.cexpr, p, xd, bd);
    Instr in;
    in.kind = Instr::Update;
    in.level = n.level;
    in.expr = n.cexpr;
    in.omega_idx = n.omega_idx;
    in.part = n.part;
    in.xnode = id;
    in.base_x = n.prev;
    p.instrs.push_back(in);
  }

  void emit_b(int id, Program& p, std::vector<char>& xd, std::vector<char>& bd) const {
    if (bd[id]) return;
    const BNode& n = bnodes_[id];
    bd[id] = 1;
    if (n.kind == BNode::Input) return;
    emit_expr(n.expr, p, xd, bd);
    if (n.xzero >= 0) xd[n.xzero] = 1;
    Instr in;
    in.kind = Instr::Coarsen;
    in.level = n.level;
    in.expr = n.expr;
    in.bnode = id;
    p.instrs.push_back(in);
  }

  int num_levels_;
  std::vector<Expr> exprs_;
  std::vector<XNode> xnodes_;
  std::vector<BNode> bnodes_;
};

// ---------------------------------------------------------------------------
// Canonical plain-text rendering (golden-file stable).

namespace detail {

inline std::string level_name(int level) {
  if (level == 0) return "h";
  return std::to_string(1 << level) + "h";
}

inline std::string op_name(const OpRef& op) {
  const std::string lvl = level_name(op.level);
  switch (op.kind) {
    case OpKind::A:
      return "A_" + lvl;
    case OpKind::DiagInvDecoupled:
      return "Dinv_" + lvl;
    case OpKind::DiagInvCollective:
      return "CDinv_" + lvl;
    case OpKind::BlockInv: {
      std::string s = "Binv";
      for (int k = 0; k < kMaxDim; ++k)
        if (op.shape[k] > 1 || k == 0) s += std::string(k ? "x" : "") + std::to_string(op.shape[k]);
      return s + "_" + lvl;
    }
    case OpKind::Restrict:
      return "R_" + lvl;
    case OpKind::Prolong:
      return "P_" + lvl;
    case OpKind::CoarseSolve:
      return "Solve_" + lvl;
  }
  return "?";
}

inline std::string x_name(const Program& p, int xid) {
  const XNode& n = p.xnodes[xid];
  const std::string lvl = level_name(n.level);
  if (n.kind == XNode::Update) return "x_" + lvl;
  return "x0_" + lvl;
}

inline std::string render_expr(const Program& p, int e) {
  const Expr& ex = p.exprs[e];
  switch (ex.kind) {
    case Expr::XRef:
      return x_name(p, ex.node);
    case Expr::BRef:
      return "b_" + level_name(p.bnodes[ex.node].level);
    case Expr::Sub:
      return "(" + render_expr(p, ex.a) + " - " + render_expr(p, ex.b) + ")";
    case Expr::Apply:
      return op_name(ex.op) + " " + render_expr(p, ex.a);
  }
  return "?";
}

inline std::string format_omega(double w) {
  // shortest exact-looking decimal for the 0.1 + 0.05 i table
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

inline std::string render_program(const Program& p) {
  std::string out;
  for (const Instr& in : p.instrs) {
    const std::string lvl = detail::level_name(in.level);
    if (in.kind == Instr::Coarsen) {
      out += "b_" + lvl + " = " + detail::render_expr(p, in.expr) + "\n";
    } else {
      out += "x_" + lvl + " = " + detail::x_name(p, in.base_x) + " + " +
             detail::format_omega(omega_of(in.omega_idx)) + " * " +
             detail::render_expr(p, in.expr);
      if (in.part == Partition::RedBlack) out += " [red-black]";
      if (in.part == Partition::Red) out += " [red]";
      if (in.part == Partition::Black) out += " [black]";
      out += "\n";
    }
  }
  return out;
}

}  // namespace mgs
