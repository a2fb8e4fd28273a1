// Stencil algebra on structured grids.
//
// A stencil is a finite set of (integer offset, weight) pairs with pairwise
// distinct offsets; it is the universal operator representation of this
// library.  The algebra below (add, sub, mult, scale, diag, diag_inv,
// lower, upper) operates purely on the offset/weight sets and is verified
// against a dense-matrix oracle in the tests.
#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "mgs/grid.hpp"

namespace mgs {

using Offset = std::array<int, kMaxDim>;  // unused trailing dims are 0

// Strict lexicographic comparison; "offset < 0" for lower/upper extraction
// compares against the zero offset under the same order (matching the
// sequential point ordering, highest dimension most significant).
inline bool offset_less(const Offset& a, const Offset& b) {
  for (int k = kMaxDim - 1; k >= 0; --k) {
    if (a[k] != b[k]) return a[k] < b[k];
  }
  return false;
}

template <class T>
struct Stencil {
  struct Entry {
    Offset off{0, 0, 0};
    T weight{};
  };
  int d = 1;
  std::vector<Entry> entries;  // offsets pairwise distinct

  Stencil() = default;
  explicit Stencil(int dim) : d(dim) {}

  void add_entry(const Offset& off, T w) { entries.push_back({off, w}); }

  // Canonical order: entries sorted by offset.  Keeps serialization and
  // floating-point accumulation order deterministic.
  void normalize() {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return offset_less(a.off, b.off); });
  }

  const T* weight_at(const Offset& off) const {
    for (const Entry& e : entries)
      if (e.off == off) return &e.weight;
    return nullptr;
  }
};

namespace detail {
template <class T>
void require_same_dim(const Stencil<T>& a, const Stencil<T>& b) {
  if (a.d != b.d) throw std::invalid_argument("stencil dimensionality mismatch");
}
}  // namespace detail

// Weights at shared offsets combined; unshared entries pass through.
template <class T>
Stencil<T> stencil_add(const Stencil<T>& a, const Stencil<T>& b) {
  detail::require_same_dim(a, b);
  Stencil<T> r = a;
  for (const auto& eb : b.entries) {
    bool merged = false;
    for (auto& er : r.entries) {
      if (er.off == eb.off) {
        er.weight += eb.weight;
        merged = true;
        break;
      }
    }
    if (!merged) r.entries.push_back(eb);
  }
  r.normalize();
  return r;
}

template <class T>
Stencil<T> stencil_scale(T alpha, const Stencil<T>& s) {
  Stencil<T> r = s;
  for (auto& e : r.entries) e.weight *= alpha;
  return r;
}

template <class T>
Stencil<T> stencil_sub(const Stencil<T>& a, const Stencil<T>& b) {
  return stencil_add(a, stencil_scale(T(-1), b));
}

// All offset sums with weight products, accumulated through stencil_add.
template <class T>
Stencil<T> stencil_mult(const Stencil<T>& a, const Stencil<T>& b) {
  detail::require_same_dim(a, b);
  Stencil<T> r(a.d);
  for (const auto& ea : a.entries) {
    Stencil<T> term(a.d);
    for (const auto& eb : b.entries) {
      Offset off;
      for (int k = 0; k < kMaxDim; ++k) off[k] = ea.off[k] + eb.off[k];
      term.add_entry(off, ea.weight * eb.weight);
    }
    r = stencil_add(r, term);
  }
  return r;
}

// Keeps only the zero offset; canonical placeholder ((0...0), 0) if absent.
template <class T>
Stencil<T> diag(const Stencil<T>& s) {
  Stencil<T> r(s.d);
  const Offset zero{0, 0, 0};
  const T* w = s.weight_at(zero);
  r.add_entry(zero, w ? *w : T{});
  return r;
}

template <class T>
Stencil<T> diag_inv(const Stencil<T>& s) {
  Stencil<T> r(s.d);
  const Offset zero{0, 0, 0};
  const T* w = s.weight_at(zero);
  if (!w || *w == T{}) throw std::domain_error("diag_inv: missing or zero diagonal entry");
  r.add_entry(zero, T(1) / *w);
  return r;
}

template <class T>
Stencil<T> lower(const Stencil<T>& s) {
  Stencil<T> r(s.d);
  const Offset zero{0, 0, 0};
  for (const auto& e : s.entries)
    if (offset_less(e.off, zero)) r.entries.push_back(e);
  r.normalize();
  return r;
}

template <class T>
Stencil<T> upper(const Stencil<T>& s) {
  Stencil<T> r(s.d);
  const Offset zero{0, 0, 0};
  for (const auto& e : s.entries)
    if (offset_less(zero, e.off)) r.entries.push_back(e);
  r.normalize();
  return r;
}

// Extra center-coefficient contribution on rows adjacent to one boundary
// side; used to fold Robin boundary conditions into an otherwise uniform
// stencil operator.  Applies where the interior index along `axis` is 0
// (side = 0, low boundary) or dims[axis]-1 (side = 1, high boundary).
template <class T>
struct BoundaryTerm {
  int axis = 0;
  int side = 0;
  T center_delta{};
};

// A (possibly blocked) linear operator on one grid level: a components x
// components matrix of stencils plus optional boundary closures on the
// diagonal blocks.  components == 1 is the plain scalar case.
template <class T>
struct Operator {
  int components = 1;
  std::vector<Stencil<T>> blocks;  // row-major, components * components
  std::vector<BoundaryTerm<T>> closures;

  Operator() = default;
  explicit Operator(const Stencil<T>& s) : components(1), blocks{s} {}
  Operator(int comps, std::vector<Stencil<T>> blk)
      : components(comps), blocks(std::move(blk)) {}

  const Stencil<T>& block(int i, int j) const { return blocks[i * components + j]; }
  Stencil<T>& block(int i, int j) { return blocks[i * components + j]; }
  int dim() const { return blocks.front().d; }
};

}  // namespace mgs
