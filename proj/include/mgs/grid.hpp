// Uniform structured grids and grid functions.
//
// Conventions (shared by every module and by the dense test oracle):
//  * A grid stores only interior points; Dirichlet data is folded into the
//    right-hand side at problem construction and exterior reads are zero.
//  * Points are ordered lexicographically with the x index fastest:
//    idx = i0 + dims[0]*(i1 + dims[1]*i2).
//  * Multi-component functions are stored component-planar:
//    value(point p, component c) = values[c*npoints + p].
//  * In a hierarchy with coarsening factor 2, level l has spacing 1/2^l and
//    2^l - 1 interior points per dimension.
#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace mgs {

constexpr int kMaxDim = 3;

struct GridDesc {
  std::array<int, kMaxDim> dims{1, 1, 1};       // interior point counts
  std::array<double, kMaxDim> spacing{1, 1, 1};  // mesh width per dimension
  int d = 1;                                     // spatial dimensionality
  int level = 0;                                 // hierarchy index

  std::int64_t npoints() const {
    std::int64_t n = 1;
    for (int k = 0; k < d; ++k) n *= dims[k];
    return n;
  }
  bool operator==(const GridDesc&) const = default;
};

// Grid of a hierarchy level: spacing 1/2^l, 2^l - 1 interior points per dim.
inline GridDesc hierarchy_grid(int d, int level) {
  GridDesc g;
  g.d = d;
  g.level = level;
  for (int k = 0; k < d; ++k) {
    g.dims[k] = (1 << level) - 1;
    g.spacing[k] = 1.0 / static_cast<double>(1 << level);
  }
  return g;
}

inline std::int64_t flat_index(const GridDesc& g, const std::array<int, kMaxDim>& i) {
  std::int64_t idx = 0;
  for (int k = g.d - 1; k >= 0; --k) idx = idx * g.dims[k] + i[k];
  return idx;
}

inline std::array<int, kMaxDim> multi_index(const GridDesc& g, std::int64_t idx) {
  std::array<int, kMaxDim> i{0, 0, 0};
  for (int k = 0; k < g.d; ++k) {
    i[k] = static_cast<int>(idx % g.dims[k]);
    idx /= g.dims[k];
  }
  return i;
}

template <class T>
struct GridFunction {
  GridDesc grid;
  int components = 1;
  std::vector<T> values;

  GridFunction() = default;
  explicit GridFunction(const GridDesc& g, int comps = 1)
      : grid(g), components(comps),
        values(static_cast<std::size_t>(g.npoints()) * comps, T{}) {}

  std::int64_t npoints() const { return grid.npoints(); }
  T& at(std::int64_t p, int c = 0) { return values[static_cast<std::size_t>(c) * npoints() + p]; }
  const T& at(std::int64_t p, int c = 0) const {
    return values[static_cast<std::size_t>(c) * npoints() + p];
  }
  void fill(T v) { values.assign(values.size(), v); }
};

namespace detail {
inline double abs2(double v) { return v * v; }
inline double abs2(const std::complex<double>& v) { return std::norm(v); }
}  // namespace detail

// Euclidean norm over complex magnitudes.  Summation runs over a fixed
// number of chunks whose partial sums are combined in chunk order, so the
// result is bit-stable regardless of the number of threads.
template <class T>
double norm2(const std::vector<T>& v) {
  constexpr std::size_t kChunks = 64;
  const std::size_t n = v.size();
  std::array<double, kChunks> partial{};
  const std::size_t step = (n + kChunks - 1) / kChunks;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < static_cast<int>(kChunks); ++c) {
    const std::size_t lo = c * step;
    const std::size_t hi = std::min(n, lo + step);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += detail::abs2(v[i]);
    partial[c] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return std::sqrt(total);
}

template <class T>
double norm2(const GridFunction<T>& u) {
  return norm2(u.values);
}

// Conjugated inner product <a, b> = sum conj(a_i) * b_i, chunk-deterministic.
template <class T>
T dotc(const std::vector<T>& a, const std::vector<T>& b) {
  constexpr std::size_t kChunks = 64;
  const std::size_t n = a.size();
  std::array<T, kChunks> partial{};
  const std::size_t step = (n + kChunks - 1) / kChunks;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < static_cast<int>(kChunks); ++c) {
    const std::size_t lo = c * step;
    const std::size_t hi = std::min(n, lo + step);
    T s{};
    for (std::size_t i = lo; i < hi; ++i) {
      if constexpr (std::is_same_v<T, std::complex<double>>)
        s += std::conj(a[i]) * b[i];
      else
        s += a[i] * b[i];
    }
    partial[c] = s;
  }
  T total{};
  for (const T& s : partial) total += s;
  return total;
}

// y += alpha * x
template <class T>
void axpy(T alpha, const std::vector<T>& x, std::vector<T>& y) {
  const std::int64_t n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace mgs
