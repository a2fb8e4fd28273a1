// Dense-matrix assembly oracle (test-only).
//
// Expands stencils, blocked operators, and transfer operators into dense
// Eigen matrices under the library's fixed x-fastest point ordering, so
// every structured kernel can be cross-checked against plain linear algebra.
#pragma once

#include <Eigen/Dense>

#include "mgs/apply.hpp"
#include "mgs/grid.hpp"
#include "mgs/stencil.hpp"

namespace mgs {

template <class T>
using DenseMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using DenseVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// M * vec(u) == vec(stencil_apply(S, u)) for all u.
template <class T>
DenseMatrix<T> assemble_matrix(const Stencil<T>& s, const GridDesc& g,
                               Boundary bc = Boundary::DirichletZero) {
  const std::int64_t n = g.npoints();
  DenseMatrix<T> m = DenseMatrix<T>::Zero(n, n);
  for (std::int64_t p = 0; p < n; ++p) {
    auto base = multi_index(g, p);
    for (const auto& e : s.entries) {
      auto i = base;
      for (int k = 0; k < g.d; ++k) i[k] += e.off[k];
      if (!detail::resolve_point(g, i, bc)) continue;
      m(p, flat_index(g, i)) += e.weight;
    }
  }
  return m;
}

// Blocked operator, component-planar unknown ordering (all points of
// component 0, then component 1, ...), matching GridFunction storage.
template <class T>
DenseMatrix<T> assemble_matrix(const Operator<T>& a, const GridDesc& g,
                               Boundary bc = Boundary::DirichletZero) {
  const std::int64_t n = g.npoints();
  const int nc = a.components;
  DenseMatrix<T> m = DenseMatrix<T>::Zero(n * nc, n * nc);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      m.block(i * n, j * n, n, n) = assemble_matrix(a.block(i, j), g, bc);
  for (const auto& t : a.closures) {
    for (std::int64_t p = 0; p < n; ++p) {
      auto idx = multi_index(g, p);
      const int edge = t.side == 0 ? 0 : g.dims[t.axis] - 1;
      if (idx[t.axis] != edge) continue;
      for (int c = 0; c < nc; ++c) m(c * n + p, c * n + p) += t.center_delta;
    }
  }
  return m;
}

// Restriction matrix (coarse x fine): row = coarse point, assembled from the
// restriction application rule at coinciding fine points.
template <class T>
DenseMatrix<T> assemble_restriction(const Stencil<T>& r, const GridDesc& coarse,
                                    const GridDesc& fine) {
  const std::int64_t nc = coarse.npoints();
  const std::int64_t nf = fine.npoints();
  DenseMatrix<T> m = DenseMatrix<T>::Zero(nc, nf);
  for (std::int64_t p = 0; p < nc; ++p) {
    auto ic = multi_index(coarse, p);
    for (const auto& e : r.entries) {
      std::array<int, kMaxDim> i{0, 0, 0};
      bool in = true;
      for (int k = 0; k < coarse.d; ++k) {
        i[k] = 2 * ic[k] + 1 + e.off[k];
        if (i[k] < 0 || i[k] >= fine.dims[k]) in = false;
      }
      if (in) m(p, flat_index(fine, i)) += e.weight;
    }
  }
  return m;
}

// Prolongation matrix (fine x coarse), assembled from the distribution rule.
template <class T>
DenseMatrix<T> assemble_prolongation(const Stencil<T>& pr, const GridDesc& fine,
                                     const GridDesc& coarse) {
  const std::int64_t nc = coarse.npoints();
  const std::int64_t nf = fine.npoints();
  DenseMatrix<T> m = DenseMatrix<T>::Zero(nf, nc);
  for (std::int64_t p = 0; p < nc; ++p) {
    auto ic = multi_index(coarse, p);
    for (const auto& e : pr.entries) {
      std::array<int, kMaxDim> i{0, 0, 0};
      bool in = true;
      for (int k = 0; k < coarse.d; ++k) {
        i[k] = 2 * ic[k] + 1 + e.off[k];
        if (i[k] < 0 || i[k] >= fine.dims[k]) in = false;
      }
      if (in) m(flat_index(fine, i), p) += e.weight;
    }
  }
  return m;
}

template <class T>
DenseVector<T> to_dense(const GridFunction<T>& u) {
  DenseVector<T> v(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) v(static_cast<Eigen::Index>(i)) = u.values[i];
  return v;
}

template <class T>
GridFunction<T> from_dense(const DenseVector<T>& v, const GridDesc& g, int comps = 1) {
  GridFunction<T> u(g, comps);
  for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = v(static_cast<Eigen::Index>(i));
  return u;
}

}  // namespace mgs
