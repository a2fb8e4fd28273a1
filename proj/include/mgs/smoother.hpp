// Smoothers: weighted (block/collective) Jacobi and red-black Gauss-Seidel.
//
// The core primitives are the B-operator applications (inverse diagonal,
// inverse pointwise component block, inverse block diagonal); a smoothing
// step is then x' = x + omega * B(b - A x), optionally restricted to one
// red-black color.  Red points have an even interior-index sum.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>

#include "mgs/apply.hpp"
#include "mgs/grid.hpp"
#include "mgs/stencil.hpp"

namespace mgs {

enum class Partition { None, Red, Black, RedBlack };

enum class SmootherKind { JacobiPointwise, JacobiCollective, RBGaussSeidel, BlockJacobi };

// Relaxation factors are stored as table indices: omega = 0.1 + 0.05 * i.
inline double omega_of(int relaxation_index) { return 0.1 + 0.05 * relaxation_index; }
constexpr int kOmegaIndexMax = 36;

struct SmootherSpec {
  SmootherKind kind = SmootherKind::JacobiPointwise;
  std::array<int, kMaxDim> block_shape{1, 1, 1};  // block-jacobi only; <= 6 points
  int relaxation_index = 18;                      // omega = 1.0

  bool operator==(const SmootherSpec&) const = default;
};

namespace detail {

inline bool is_red(const std::array<int, kMaxDim>& i, int d) {
  int s = 0;
  for (int k = 0; k < d; ++k) s += i[k];
  return (s & 1) == 0;
}

inline bool in_partition(const std::array<int, kMaxDim>& i, int d, Partition p) {
  switch (p) {
    case Partition::None:
    case Partition::RedBlack:
      return true;
    case Partition::Red:
      return is_red(i, d);
    case Partition::Black:
      return !is_red(i, d);
  }
  return true;
}

// Boundary-closure contribution to the diagonal at point i.
template <class T>
T closure_delta(const Operator<T>& a, const GridDesc& g, const std::array<int, kMaxDim>& i) {
  T delta{};
  for (const auto& t : a.closures) {
    const int edge = t.side == 0 ? 0 : g.dims[t.axis] - 1;
    if (i[t.axis] == edge) delta += t.center_delta;
  }
  return delta;
}

}  // namespace detail

// out = D^{-1} c with D the per-component diagonal of A (decoupled variant).
template <class T>
GridFunction<T> apply_diag_inv_decoupled(const Operator<T>& a, const GridFunction<T>& c) {
  GridFunction<T> out(c.grid, c.components);
  const std::int64_t n = c.npoints();
  for (int comp = 0; comp < c.components; ++comp) {
    const T* w = a.block(comp, comp).weight_at({0, 0, 0});
    if (!w || *w == T{}) throw std::domain_error("jacobi: zero diagonal");
    const T base = *w;
    const bool closures = !a.closures.empty();
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      T d = base;
      if (closures) d += detail::closure_delta(a, c.grid, multi_index(c.grid, p));
      out.at(p, comp) = c.at(p, comp) / d;
    }
  }
  return out;
}

// out = D^{-1} c with D the pointwise components x components block
// (collective variant for PDE systems).
template <class T>
GridFunction<T> apply_diag_inv_collective(const Operator<T>& a, const GridFunction<T>& c) {
  const int nc = a.components;
  if (nc == 1) return apply_diag_inv_decoupled(a, c);
  GridFunction<T> out(c.grid, c.components);
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> d(nc, nc);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j) {
      const T* w = a.block(i, j).weight_at({0, 0, 0});
      d(i, j) = w ? *w : T{};
    }
  // Closures only arise for scalar operators; the uniform pointwise block
  // can therefore be factored once.
  Eigen::PartialPivLU<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> lu(d);
  const std::int64_t n = c.npoints();
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    Eigen::Matrix<T, Eigen::Dynamic, 1> rhs(nc);
    for (int i = 0; i < nc; ++i) rhs(i) = c.at(p, i);
    Eigen::Matrix<T, Eigen::Dynamic, 1> sol = lu.solve(rhs);
    for (int i = 0; i < nc; ++i) out.at(p, i) = sol(i);
  }
  return out;
}

// out = blockdiag(A)^{-1} c for a tiling with rectangular blocks of the
// given shape (ragged final blocks allowed).  The local matrix couples all
// (point, component) unknowns inside one block; one factorization is
// computed per distinct block geometry and reused.
template <class T>
GridFunction<T> apply_block_inv(const Operator<T>& a, const GridFunction<T>& c,
                                const std::array<int, kMaxDim>& shape) {
  const GridDesc& g = c.grid;
  const int nc = a.components;
  GridFunction<T> out(g, nc);

  std::array<int, kMaxDim> nblocks{1, 1, 1};
  int total_blocks = 1;
  for (int k = 0; k < g.d; ++k) {
    nblocks[k] = (g.dims[k] + shape[k] - 1) / shape[k];
    total_blocks *= nblocks[k];
  }

  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Lu = Eigen::PartialPivLU<Mat>;
  // Uniform-interior blocks share their local matrix unless boundary
  // closures make boundary-adjacent rows special.
  const bool cacheable = a.closures.empty();
  std::map<std::array<int, kMaxDim>, Lu> cache;

  for (int blk = 0; blk < total_blocks; ++blk) {
    std::array<int, kMaxDim> bi{0, 0, 0}, lo{0, 0, 0}, ext{1, 1, 1};
    int rest = blk;
    int pts = 1;
    for (int k = 0; k < g.d; ++k) {
      bi[k] = rest % nblocks[k];
      rest /= nblocks[k];
      lo[k] = bi[k] * shape[k];
      ext[k] = std::min(shape[k], g.dims[k] - lo[k]);
      pts *= ext[k];
    }
    const int m = pts * nc;

    auto local_point = [&](int q) {
      std::array<int, kMaxDim> i = lo;
      int r = q;
      for (int k = 0; k < g.d; ++k) {
        i[k] += r % ext[k];
        r /= ext[k];
      }
      return i;
    };

    auto build = [&]() {
      Mat mat = Mat::Zero(m, m);
      for (int q = 0; q < pts; ++q) {
        auto pi = local_point(q);
        for (int r = 0; r < pts; ++r) {
          auto pj = local_point(r);
          Offset off{0, 0, 0};
          for (int k = 0; k < g.d; ++k) off[k] = pj[k] - pi[k];
          for (int ci = 0; ci < nc; ++ci)
            for (int cj = 0; cj < nc; ++cj) {
              const T* w = a.block(ci, cj).weight_at(off);
              if (w) mat(q * nc + ci, r * nc + cj) += *w;
            }
        }
        if (!a.closures.empty()) {
          const T delta = detail::closure_delta(a, g, pi);
          for (int ci = 0; ci < nc; ++ci) mat(q * nc + ci, q * nc + ci) += delta;
        }
      }
      return Lu(mat);
    };

    const Lu* lu = nullptr;
    Lu local;
    if (cacheable) {
      auto it = cache.find(ext);
      if (it == cache.end()) it = cache.emplace(ext, build()).first;
      lu = &it->second;
    } else {
      local = build();
      lu = &local;
    }

    Eigen::Matrix<T, Eigen::Dynamic, 1> rhs(m);
    for (int q = 0; q < pts; ++q) {
      const std::int64_t p = flat_index(g, local_point(q));
      for (int ci = 0; ci < nc; ++ci) rhs(q * nc + ci) = c.at(p, ci);
    }
    Eigen::Matrix<T, Eigen::Dynamic, 1> sol = lu->solve(rhs);
    for (int q = 0; q < pts; ++q) {
      const std::int64_t p = flat_index(g, local_point(q));
      for (int ci = 0; ci < nc; ++ci) out.at(p, ci) = sol(q * nc + ci);
    }
  }
  return out;
}

namespace detail {

// x += omega * corr on the selected color subset of one component.
template <class T>
void masked_update_component(GridFunction<T>& x, const GridFunction<T>& corr, double omega,
                             Partition part, int c) {
  const std::int64_t n = x.npoints();
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    if (part == Partition::None || in_partition(multi_index(x.grid, p), x.grid.d, part))
      x.at(p, c) += T(omega) * corr.at(p, c);
  }
}

// x += omega * corr on the selected color subset.
template <class T>
void masked_update(GridFunction<T>& x, const GridFunction<T>& corr, double omega, Partition part) {
  const std::int64_t n = x.npoints();
  for (int c = 0; c < x.components; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      if (part == Partition::None || in_partition(multi_index(x.grid, p), x.grid.d, part))
        x.at(p, c) += T(omega) * corr.at(p, c);
    }
  }
}

}  // namespace detail

// One weighted-Jacobi step x' = x + omega D^{-1} (b - A x), optionally on a
// single color.  `collective` selects the pointwise-block variant for
// systems; for scalar operators the variants coincide.
template <class T>
GridFunction<T> smooth_jacobi(const Operator<T>& a, const GridFunction<T>& x,
                              const GridFunction<T>& b, double omega,
                              Partition part = Partition::None, bool collective = false) {
  GridFunction<T> r = operator_apply(a, x);
  const std::int64_t total = static_cast<std::int64_t>(r.values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < total; ++i) r.values[i] = b.values[i] - r.values[i];
  GridFunction<T> corr =
      collective ? apply_diag_inv_collective(a, r) : apply_diag_inv_decoupled(a, r);
  GridFunction<T> out = x;
  detail::masked_update(out, corr, omega, part);
  return out;
}

// Red-black Gauss-Seidel sweep: red half-sweep, then a black half-sweep on
// the refreshed residual.
template <class T>
GridFunction<T> smooth_rbgs(const Operator<T>& a, const GridFunction<T>& x,
                            const GridFunction<T>& b, double omega, bool collective = false) {
  GridFunction<T> mid = smooth_jacobi(a, x, b, omega, Partition::Red, collective);
  return smooth_jacobi(a, mid, b, omega, Partition::Black, collective);
}

// Block-Jacobi step: every block is corrected from the same input x.
template <class T>
GridFunction<T> smooth_block_jacobi(const Operator<T>& a, const GridFunction<T>& x,
                                    const GridFunction<T>& b, double omega,
                                    const std::array<int, kMaxDim>& shape) {
  GridFunction<T> r = operator_apply(a, x);
  const std::int64_t total = static_cast<std::int64_t>(r.values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < total; ++i) r.values[i] = b.values[i] - r.values[i];
  GridFunction<T> corr = apply_block_inv(a, r, shape);
  GridFunction<T> out = x;
  detail::masked_update(out, corr, omega, Partition::None);
  return out;
}

}  // namespace mgs
