// Stencil application and inter-grid transfer kernels.
//
// Each kernel exists twice: an OpenMP-parallel version (namespace mgs) used
// by the solver executor and a straightforward serial reference version
// (namespace mgs::serial) kept for testing and benchmarking.  The parallel
// prolongation uses the gather formulation of the distribution rule so that
// output points are written by exactly one thread.
#pragma once

#include "mgs/grid.hpp"
#include "mgs/stencil.hpp"

namespace mgs {

enum class Boundary { DirichletZero, Periodic };

namespace detail {

// Resolves an out-of-range read per boundary policy.  Returns false when the
// value is zero (Dirichlet exterior).
inline bool resolve_point(const GridDesc& g, std::array<int, kMaxDim>& i, Boundary bc) {
  for (int k = 0; k < g.d; ++k) {
    if (i[k] < 0 || i[k] >= g.dims[k]) {
      if (bc == Boundary::DirichletZero) return false;
      i[k] = ((i[k] % g.dims[k]) + g.dims[k]) % g.dims[k];
    }
  }
  return true;
}

}  // namespace detail

namespace serial {

template <class T>
void stencil_apply_into(const Stencil<T>& s, const GridFunction<T>& u, int comp_in,
                        GridFunction<T>& out, int comp_out, Boundary bc, bool accumulate) {
  const GridDesc& g = u.grid;
  const std::int64_t n = g.npoints();
  for (std::int64_t p = 0; p < n; ++p) {
    auto base = multi_index(g, p);
    T acc{};
    for (const auto& e : s.entries) {
      auto i = base;
      for (int k = 0; k < g.d; ++k) i[k] += e.off[k];
      if (!detail::resolve_point(g, i, bc)) continue;
      acc += e.weight * u.at(flat_index(g, i), comp_in);
    }
    if (accumulate)
      out.at(p, comp_out) += acc;
    else
      out.at(p, comp_out) = acc;
  }
}

template <class T>
GridFunction<T> stencil_apply(const Stencil<T>& s, const GridFunction<T>& u,
                              Boundary bc = Boundary::DirichletZero) {
  if (s.d != u.grid.d) throw std::invalid_argument("stencil_apply: dimensionality mismatch");
  GridFunction<T> out(u.grid, u.components);
  for (int c = 0; c < u.components; ++c)
    serial::stencil_apply_into(s, u, c, out, c, bc, false);
  return out;
}

// Restriction: evaluated only at fine points coinciding with coarse points
// (fine index 2*ic + 1 per dimension); offsets are in fine-grid units.
template <class T>
GridFunction<T> restrict_apply(const Stencil<T>& r, const GridFunction<T>& u_fine,
                               const GridDesc& coarse, Boundary bc = Boundary::DirichletZero) {
  for (int k = 0; k < coarse.d; ++k)
    if (2 * coarse.dims[k] + 1 != u_fine.grid.dims[k])
      throw std::invalid_argument("restrict_apply: grids not nested");
  GridFunction<T> out(coarse, u_fine.components);
  const std::int64_t n = coarse.npoints();
  for (int c = 0; c < u_fine.components; ++c) {
    for (std::int64_t p = 0; p < n; ++p) {
      auto ic = multi_index(coarse, p);
      T acc{};
      for (const auto& e : r.entries) {
        std::array<int, kMaxDim> i{0, 0, 0};
        for (int k = 0; k < coarse.d; ++k) i[k] = 2 * ic[k] + 1 + e.off[k];
        if (!detail::resolve_point(u_fine.grid, i, bc)) continue;
        acc += e.weight * u_fine.at(flat_index(u_fine.grid, i), c);
      }
      out.at(p, c) = acc;
    }
  }
  return out;
}

// Prolongation as a distribution process: every coarse value is scattered
// to the fine neighbors of its coinciding fine point.
template <class T>
GridFunction<T> prolong_apply(const Stencil<T>& pr, const GridFunction<T>& u_coarse,
                              const GridDesc& fine) {
  for (int k = 0; k < fine.d; ++k)
    if (fine.dims[k] != 2 * u_coarse.grid.dims[k] + 1)
      throw std::invalid_argument("prolong_apply: grids not nested");
  GridFunction<T> out(fine, u_coarse.components);
  const std::int64_t n = u_coarse.npoints();
  for (int c = 0; c < u_coarse.components; ++c) {
    for (std::int64_t p = 0; p < n; ++p) {
      auto ic = multi_index(u_coarse.grid, p);
      for (const auto& e : pr.entries) {
        std::array<int, kMaxDim> i{0, 0, 0};
        bool in = true;
        for (int k = 0; k < fine.d; ++k) {
          i[k] = 2 * ic[k] + 1 + e.off[k];
          if (i[k] < 0 || i[k] >= fine.dims[k]) in = false;
        }
        if (!in) continue;
        out.at(flat_index(fine, i), c) += e.weight * u_coarse.at(p, c);
      }
    }
  }
  return out;
}

}  // namespace serial

template <class T>
void stencil_apply_into(const Stencil<T>& s, const GridFunction<T>& u, int comp_in,
                        GridFunction<T>& out, int comp_out, Boundary bc, bool accumulate) {
  const GridDesc& g = u.grid;
  const std::int64_t n = g.npoints();
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    auto base = multi_index(g, p);
    T acc{};
    for (const auto& e : s.entries) {
      auto i = base;
      for (int k = 0; k < g.d; ++k) i[k] += e.off[k];
      if (!detail::resolve_point(g, i, bc)) continue;
      acc += e.weight * u.at(flat_index(g, i), comp_in);
    }
    if (accumulate)
      out.at(p, comp_out) += acc;
    else
      out.at(p, comp_out) = acc;
  }
}

template <class T>
GridFunction<T> stencil_apply(const Stencil<T>& s, const GridFunction<T>& u,
                              Boundary bc = Boundary::DirichletZero) {
  if (s.d != u.grid.d) throw std::invalid_argument("stencil_apply: dimensionality mismatch");
  GridFunction<T> out(u.grid, u.components);
  for (int c = 0; c < u.components; ++c) stencil_apply_into(s, u, c, out, c, bc, false);
  return out;
}

// Adds the boundary-closure contributions of an operator's diagonal blocks.
template <class T>
void apply_closures(const Operator<T>& a, const GridFunction<T>& u, GridFunction<T>& out) {
  if (a.closures.empty()) return;
  const GridDesc& g = u.grid;
  const std::int64_t n = g.npoints();
  for (int c = 0; c < a.components; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      auto i = multi_index(g, p);
      T delta{};
      for (const auto& t : a.closures) {
        const int edge = t.side == 0 ? 0 : g.dims[t.axis] - 1;
        if (i[t.axis] == edge) delta += t.center_delta;
      }
      if (delta != T{}) out.at(p, c) += delta * u.at(p, c);
    }
  }
}

// Blocked operator application: component i of the result sums
// stencil_apply(block[i][j], component j), plus diagonal closures.
template <class T>
GridFunction<T> operator_apply(const Operator<T>& a, const GridFunction<T>& u,
                               Boundary bc = Boundary::DirichletZero) {
  GridFunction<T> out(u.grid, u.components);
  for (int i = 0; i < a.components; ++i)
    for (int j = 0; j < a.components; ++j)
      stencil_apply_into(a.block(i, j), u, j, out, i, bc, j != 0);
  apply_closures(a, u, out);
  return out;
}

template <class T>
GridFunction<T> restrict_apply(const Stencil<T>& r, const GridFunction<T>& u_fine,
                               const GridDesc& coarse, Boundary bc = Boundary::DirichletZero) {
  for (int k = 0; k < coarse.d; ++k)
    if (2 * coarse.dims[k] + 1 != u_fine.grid.dims[k])
      throw std::invalid_argument("restrict_apply: grids not nested");
  GridFunction<T> out(coarse, u_fine.components);
  const std::int64_t n = coarse.npoints();
  for (int c = 0; c < u_fine.components; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      auto ic = multi_index(coarse, p);
      T acc{};
      for (const auto& e : r.entries) {
        std::array<int, kMaxDim> i{0, 0, 0};
        for (int k = 0; k < coarse.d; ++k) i[k] = 2 * ic[k] + 1 + e.off[k];
        if (!detail::resolve_point(u_fine.grid, i, bc)) continue;
        acc += e.weight * u_fine.at(flat_index(u_fine.grid, i), c);
      }
      out.at(p, c) = acc;
    }
  }
  return out;
}

// Gather formulation of the prolongation scatter: fine point f receives
// b_k * u_coarse(ic) for every offset with f = 2*ic + 1 + a_k.  Numerically
// identical to the serial distribution (same summands, ordered by entry).
template <class T>
GridFunction<T> prolong_apply(const Stencil<T>& pr, const GridFunction<T>& u_coarse,
                              const GridDesc& fine) {
  for (int k = 0; k < fine.d; ++k)
    if (fine.dims[k] != 2 * u_coarse.grid.dims[k] + 1)
      throw std::invalid_argument("prolong_apply: grids not nested");
  GridFunction<T> out(fine, u_coarse.components);
  const GridDesc& cg = u_coarse.grid;
  const std::int64_t n = fine.npoints();
  for (int c = 0; c < u_coarse.components; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      auto f = multi_index(fine, p);
      T acc{};
      for (const auto& e : pr.entries) {
        std::array<int, kMaxDim> ic{0, 0, 0};
        bool hit = true;
        for (int k = 0; k < fine.d; ++k) {
          const int src = f[k] - e.off[k];      // coinciding fine index 2*ic+1
          if ((src & 1) == 0) { hit = false; break; }
          ic[k] = (src - 1) / 2;
          if (ic[k] < 0 || ic[k] >= cg.dims[k]) { hit = false; break; }
        }
        if (hit) acc += e.weight * u_coarse.at(flat_index(cg, ic), c);
      }
      out.at(p, c) = acc;
    }
  }
  return out;
}

}  // namespace mgs
