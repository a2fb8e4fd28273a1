// Benchmark problem constructors and reference multigrid cycles.
//
// Each problem provides five discretization levels l in [l_max-4, l_max]
// (rediscretized per level, not Galerkin-coarsened), a finest right-hand
// side with Dirichlet data folded in, and the solver hierarchy a compiled
// program runs on.  For the Helmholtz problem that hierarchy is the
// complex-shifted preconditioner M; the original operator A is kept for
// the outer Krylov iteration.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>

#include "mgs/executor.hpp"
#include "mgs/fitness.hpp"
#include "mgs/transfer.hpp"

namespace mgs {

template <class T>
struct Problem {
  std::string name;
  int d = 2;
  int components = 1;
  int l_min = 1, l_max = 5;     // absolute discretization levels
  Hierarchy<T> solver_h;        // hierarchy the multigrid program runs on
  Operator<T> outer_a;          // finest true operator (Krylov residuals)
  GridFunction<T> rhs;          // finest right-hand side, boundary folded in
  double epsilon = 1e-12;
  bool preconditioned = false;  // evaluate inside BiCGSTAB
  FitnessMode mode = FitnessMode::TimeRho;
  double wavenumber = 0.0;

  int depth() const { return l_max - l_min + 1; }
};

namespace detail {

// Physical coordinates of interior index i: x_k = (i_k + 1) * h_k.
inline std::array<double, kMaxDim> point_pos(const GridDesc& g,
                                             const std::array<int, kMaxDim>& i) {
  std::array<double, kMaxDim> p{0, 0, 0};
  for (int k = 0; k < g.d; ++k) p[k] = (i[k] + 1) * g.spacing[k];
  return p;
}

// Builds the finest right-hand side b_i = f_i(x) - sum_{exterior reads}
// w * g_j(x + a*h): the standard fold-in of Dirichlet data.
template <class T>
GridFunction<T> build_rhs(
    const Operator<T>& a, const GridDesc& g,
    const std::function<T(int comp, const std::array<double, kMaxDim>&)>& f,
    const std::function<T(int comp, const std::array<double, kMaxDim>&)>& bc) {
  GridFunction<T> b(g, a.components);
  const std::int64_t n = g.npoints();
  for (int ci = 0; ci < a.components; ++ci) {
    for (std::int64_t p = 0; p < n; ++p) {
      auto base = multi_index(g, p);
      T v = f(ci, point_pos(g, base));
      for (int cj = 0; cj < a.components; ++cj) {
        for (const auto& e : a.block(ci, cj).entries) {
          auto i = base;
          bool outside = false;
          for (int k = 0; k < g.d; ++k) {
            i[k] += e.off[k];
            if (i[k] < 0 || i[k] >= g.dims[k]) outside = true;
          }
          if (!outside) continue;
          std::array<double, kMaxDim> pos{0, 0, 0};
          for (int k = 0; k < g.d; ++k) pos[k] = (i[k] + 1) * g.spacing[k];
          v -= e.weight * bc(cj, pos);
        }
      }
      b.at(p, ci) = v;
    }
  }
  return b;
}

template <class T>
Hierarchy<T> build_hierarchy(int d, int comps, int l_min, int l_max,
                             const std::function<Operator<T>(int)>& op_of_level,
                             const CoarseSolverSpec& cs) {
  Hierarchy<T> h;
  h.components = comps;
  h.coarse = cs;
  for (int l = l_max; l >= l_min; --l) {
    LevelOps<T> lv;
    lv.desc = hierarchy_grid(d, l);
    lv.a = op_of_level(l);
    lv.restrict_s = make_restriction<T>(d, RestrictionKind::FullWeighting);
    lv.prolong_s = make_prolongation<T>(d);
    h.level.push_back(std::move(lv));
  }
  return h;
}

}  // namespace detail

// --- 2D / 3D Poisson --------------------------------------------------------
//
// Operator -laplace_h: center 2d/h^2, nearest neighbors -1/h^2 (positive
// definite).  Source data: 2D f = pi^2 cos(pi x) - 4 pi^2 sin(2 pi y),
// g = cos(pi x) - sin(pi y); 3D f = x^2 - 0.5 y^2 - 0.5 z^2, g = 0.
inline Problem<double> make_poisson(int dim, int l_max) {
  using std::numbers::pi;
  auto op = [dim](int l) {
    const double h = 1.0 / (1 << l);
    const double c = 1.0 / (h * h);
    Stencil<double> s(dim);
    s.add_entry({0, 0, 0}, 2.0 * dim * c);
    for (int k = 0; k < dim; ++k) {
      Offset lo{0, 0, 0}, hi{0, 0, 0};
      lo[k] = -1;
      hi[k] = 1;
      s.add_entry(lo, -c);
      s.add_entry(hi, -c);
    }
    s.normalize();
    return Operator<double>(s);
  };
  Problem<double> p;
  p.name = dim == 2 ? "poisson2d" : "poisson3d";
  p.d = dim;
  p.l_min = l_max - 4;
  p.l_max = l_max;
  p.solver_h = detail::build_hierarchy<double>(dim, 1, p.l_min, p.l_max, op, {});
  p.outer_a = p.solver_h.level.front().a;
  std::function<double(int, const std::array<double, kMaxDim>&)> f, g;
  if (dim == 2) {
    f = [](int, const std::array<double, kMaxDim>& x) {
      return pi * pi * std::cos(pi * x[0]) - 4.0 * pi * pi * std::sin(2.0 * pi * x[1]);
    };
    g = [](int, const std::array<double, kMaxDim>& x) {
      return std::cos(pi * x[0]) - std::sin(pi * x[1]);
    };
  } else {
    f = [](int, const std::array<double, kMaxDim>& x) {
      return x[0] * x[0] - 0.5 * x[1] * x[1] - 0.5 * x[2] * x[2];
    };
    g = [](int, const std::array<double, kMaxDim>&) { return 0.0; };
  }
  p.rhs = detail::build_rhs<double>(p.outer_a, p.solver_h.level.front().desc, f, g);
  return p;
}

inline Problem<double> make_poisson_2d(int l_max) { return make_poisson(2, l_max); }
inline Problem<double> make_poisson_3d(int l_max) { return make_poisson(3, l_max); }

// --- 2D linear elasticity ---------------------------------------------------
//
// Block system (alpha = 195, beta = 130)
//   [ (a+b) dxx + a lap,  (a+b) dxy        ] [u]   [0]
//   [ (a+b) dxy,          (a+b) dyy + a lap] [v] = [0]
// with u = 0 and v = g = 0.4 (1-x) x y sin(pi x) on the boundary.  The
// discrete operators are the standard central-difference stencils; the
// whole system is negated so the diagonal blocks are positive definite
// (pure sign convention, identical iterates for every method here).
inline Problem<double> make_elasticity_2d(int l_max) {
  using std::numbers::pi;
  constexpr double alpha = 195.0, beta = 130.0;
  auto op = [](int l) {
    const double c = static_cast<double>(1 << l) * static_cast<double>(1 << l);
    // negated (a+b) dxx + a lap  /  (a+b) dyy + a lap
    auto diag_block = [&](int axis) {
      Stencil<double> s(2);
      s.add_entry({0, 0, 0}, (2.0 * (alpha + beta) + 4.0 * alpha) * c);
      for (int k = 0; k < 2; ++k) {
        const double w = k == axis ? (2.0 * alpha + beta) : alpha;
        Offset lo{0, 0, 0}, hi{0, 0, 0};
        lo[k] = -1;
        hi[k] = 1;
        s.add_entry(lo, -w * c);
        s.add_entry(hi, -w * c);
      }
      s.normalize();
      return s;
    };
    // negated (a+b)/(4h^2) cross-derivative
    Stencil<double> cross(2);
    const double m = (alpha + beta) * 0.25 * c;
    cross.add_entry({1, 1, 0}, -m);
    cross.add_entry({-1, 1, 0}, m);
    cross.add_entry({1, -1, 0}, m);
    cross.add_entry({-1, -1, 0}, -m);
    cross.normalize();
    return Operator<double>(2, {diag_block(0), cross, cross, diag_block(1)});
  };
  Problem<double> p;
  p.name = "elasticity2d";
  p.d = 2;
  p.components = 2;
  p.l_min = l_max - 4;
  p.l_max = l_max;
  p.solver_h = detail::build_hierarchy<double>(2, 2, p.l_min, p.l_max, op, {});
  p.outer_a = p.solver_h.level.front().a;
  std::function<double(int, const std::array<double, kMaxDim>&)> f =
      [](int, const std::array<double, kMaxDim>&) { return 0.0; };
  std::function<double(int, const std::array<double, kMaxDim>&)> g =
      [](int comp, const std::array<double, kMaxDim>& x) {
        if (comp == 0) return 0.0;
        return 0.4 * (1.0 - x[0]) * x[0] * x[1] * std::sin(pi * x[0]);
      };
  p.rhs = detail::build_rhs<double>(p.outer_a, p.solver_h.level.front().desc, f, g);
  return p;
}

// --- 2D Helmholtz with shifted-Laplace preconditioner -----------------------
//
// A_h: center (4 - (kh)^2)/h^2, neighbors -1/h^2; M_h shifts the center by
// -(0.5 i)(kh)^2/h^2.  Dirichlet top/bottom; Robin radiation d_n u - iku = 0
// left/right, folded into boundary-adjacent rows via the local second-order
// elimination u_bnd = u_1 / (1 - ikh - (kh)^2/2).  Grid from hk = 0.625;
// the source is a centered nodal load of 1/h^2.
inline Problem<std::complex<double>> make_helmholtz_2d(double k) {
  using C = std::complex<double>;
  const double ratio = k / 0.625;
  const int l_max = static_cast<int>(std::lround(std::log2(ratio)));
  if (std::abs(ratio - (1 << l_max)) > 1e-9 || l_max < 5)
    throw std::invalid_argument("make_helmholtz_2d: k does not match a dyadic grid");

  auto op = [k](int l, bool shifted) {
    const double h = 1.0 / (1 << l);
    const double c = 1.0 / (h * h);
    const double kh = k * h;
    C center = C(4.0 - kh * kh, 0.0) * c;
    if (shifted) center -= C(0.0, 0.5) * (kh * kh) * c;
    Stencil<C> s(2);
    s.add_entry({0, 0, 0}, center);
    for (const Offset off : {Offset{-1, 0, 0}, Offset{1, 0, 0}, Offset{0, -1, 0}, Offset{0, 1, 0}})
      s.add_entry(off, C(-c, 0.0));
    s.normalize();
    Operator<C> a(s);
    const C kappa = C(1.0, 0.0) / (C(1.0, 0.0) - C(0.0, kh) - C(0.5 * kh * kh, 0.0));
    a.closures.push_back({0, 0, -kappa * c});
    a.closures.push_back({0, 1, -kappa * c});
    return a;
  };

  Problem<C> p;
  p.name = "helmholtz2d";
  p.d = 2;
  p.l_min = l_max - 4;
  p.l_max = l_max;
  p.wavenumber = k;
  p.preconditioned = true;
  p.mode = FitnessMode::TimeIters;
  p.epsilon = k <= 160.0 ? 1e-7 : 1e-6;
  CoarseSolverSpec cs;
  cs.kind = KrylovKind::Bicgstab;
  p.solver_h = detail::build_hierarchy<C>(
      2, 1, p.l_min, p.l_max, [&](int l) { return op(l, true); }, cs);
  p.outer_a = op(l_max, false);

  const GridDesc& g = p.solver_h.level.front().desc;
  p.rhs = GridFunction<C>(g, 1);
  std::array<int, kMaxDim> center{(g.dims[0] - 1) / 2, (g.dims[1] - 1) / 2, 0};
  const double h = g.spacing[0];
  p.rhs.at(flat_index(g, center)) = C(1.0 / (h * h), 0.0);
  return p;
}

// --- Reference cycles -------------------------------------------------------

enum class CycleKind { V, W, F };

namespace detail {

struct CycleParams {
  int depth;
  int components;
  int nu1, nu2;
  SmootherKind smoother;
  int omega_idx;
  std::array<int, kMaxDim> block_shape{1, 1, 1};
};

inline State cycle_smooth(IRBuilder& ir, State s, int l, const CycleParams& cp) {
  // a freshly coarsened state already carries its residual
  if (s.c < 0) s = ir.mk_residual(s);
  OpRef b{OpKind::DiagInvDecoupled, l};
  Partition part = Partition::None;
  switch (cp.smoother) {
    case SmootherKind::JacobiPointwise:
      break;
    case SmootherKind::JacobiCollective:
      b.kind = OpKind::DiagInvCollective;
      break;
    case SmootherKind::RBGaussSeidel:
      b.kind = cp.components > 1 ? OpKind::DiagInvCollective : OpKind::DiagInvDecoupled;
      part = Partition::RedBlack;
      break;
    case SmootherKind::BlockJacobi:
      b.kind = OpKind::BlockInv;
      b.shape = cp.block_shape;
      break;
  }
  s = ir.mk_apply(b, s);
  return ir.mk_update(cp.omega_idx, part, s);
}

inline State cycle_body(IRBuilder& ir, State s, int l, int gamma, const CycleParams& cp) {
  constexpr int kOmegaOne = 18;  // omega = 1.0 for the coarse-grid correction
  for (int i = 0; i < cp.nu1; ++i) s = cycle_smooth(ir, s, l, cp);
  if (l == cp.depth - 2) {
    // base case: the next level is solved exactly (two-grid method), so the
    // recursion count does not multiply here
    if (s.c < 0) s = ir.mk_residual(s);
    s = ir.mk_coarse_grid_solver(s);
    s = ir.mk_update(kOmegaOne, Partition::None, s);
  } else {
    if (s.c < 0) s = ir.mk_residual(s);
    s = ir.mk_apply({OpKind::Restrict, l}, s);
    State cs = ir.mk_coarsening(s);
    for (int g = 0; g < gamma; ++g) cs = cycle_body(ir, cs, l + 1, gamma, cp);
    s = ir.mk_cgc(cs);
    s = ir.mk_update(kOmegaOne, Partition::None, s);
  }
  for (int i = 0; i < cp.nu2; ++i) s = cycle_smooth(ir, s, l, cp);
  return s;
}

// F-cycle: at every level one F descent followed by one V descent.
inline State fcycle_body(IRBuilder& ir, State s, int l, const CycleParams& cp) {
  constexpr int kOmegaOne = 18;
  for (int i = 0; i < cp.nu1; ++i) s = cycle_smooth(ir, s, l, cp);
  if (l == cp.depth - 2) {
    if (s.c < 0) s = ir.mk_residual(s);
    s = ir.mk_coarse_grid_solver(s);
    s = ir.mk_update(kOmegaOne, Partition::None, s);
  } else {
    if (s.c < 0) s = ir.mk_residual(s);
    s = ir.mk_apply({OpKind::Restrict, l}, s);
    State cs = ir.mk_coarsening(s);
    cs = fcycle_body(ir, cs, l + 1, cp);
    cs = cycle_body(ir, cs, l + 1, 1, cp);
    s = ir.mk_cgc(cs);
    s = ir.mk_update(kOmegaOne, Partition::None, s);
  }
  for (int i = 0; i < cp.nu2; ++i) s = cycle_smooth(ir, s, l, cp);
  return s;
}

}  // namespace detail

inline Program reference_cycle(int depth, int components, CycleKind kind, int nu1, int nu2,
                               SmootherKind smoother, int omega_idx,
                               std::array<int, kMaxDim> block_shape = {1, 1, 1}) {
  detail::CycleParams cp{depth, components, nu1, nu2, smoother, omega_idx, block_shape};
  IRBuilder ir(depth);
  State s = ir.initial_state();
  if (kind == CycleKind::F)
    s = detail::fcycle_body(ir, s, 0, cp);
  else
    s = detail::cycle_body(ir, s, 0, kind == CycleKind::W ? 2 : 1, cp);
  return ir.generate_program(s);
}

// Relaxation-factor index for a given omega; throws if omega is not in the
// 0.1 + 0.05 i table.
inline int omega_index_of(double omega) {
  const int idx = static_cast<int>(std::lround((omega - 0.1) / 0.05));
  if (idx < 0 || idx > kOmegaIndexMax || std::abs(omega_of(idx) - omega) > 1e-9)
    throw std::invalid_argument("omega not in relaxation table");
  return idx;
}

}  // namespace mgs
