// Inter-grid transfer operator constructors (tensor-product stencils).
#pragma once

#include <stdexcept>

#include "mgs/stencil.hpp"

namespace mgs {

enum class RestrictionKind { FullWeighting, HalfWeighting, Injection };

namespace detail {

// Tensor product of the 1D weights w(-1), w(0), w(1) over d dimensions.
template <class T>
Stencil<T> tensor3(int d, double wm, double w0, double wp) {
  Stencil<T> s(d);
  const double w1d[3] = {wm, w0, wp};
  int total = 1;
  for (int k = 0; k < d; ++k) total *= 3;
  for (int idx = 0; idx < total; ++idx) {
    Offset off{0, 0, 0};
    double w = 1.0;
    int rest = idx;
    for (int k = 0; k < d; ++k) {
      const int o = rest % 3 - 1;
      rest /= 3;
      off[k] = o;
      w *= w1d[o + 1];
    }
    s.add_entry(off, T(w));
  }
  s.normalize();
  return s;
}

}  // namespace detail

// Restriction stencils in fine-grid units:
//   full-weighting:  tensor product of 1/4 [1 2 1]
//   half-weighting:  2D: 1/8 [[0 1 0],[1 4 1],[0 1 0]];
//                    3D: 1/12 {center 6, face neighbors 1}
//   injection:       {((0...0), 1)}
template <class T = double>
Stencil<T> make_restriction(int d, RestrictionKind kind) {
  if (d < 1 || d > 3) throw std::invalid_argument("make_restriction: unsupported dimension");
  switch (kind) {
    case RestrictionKind::FullWeighting:
      return detail::tensor3<T>(d, 0.25, 0.5, 0.25);
    case RestrictionKind::Injection: {
      Stencil<T> s(d);
      s.add_entry({0, 0, 0}, T(1));
      return s;
    }
    case RestrictionKind::HalfWeighting: {
      if (d == 1) return detail::tensor3<T>(1, 0.25, 0.5, 0.25);  // degenerates to FW
      Stencil<T> s(d);
      const double denom = d == 2 ? 8.0 : 12.0;
      s.add_entry({0, 0, 0}, T(2.0 * d / denom));
      for (int k = 0; k < d; ++k) {
        Offset lo{0, 0, 0}, hi{0, 0, 0};
        lo[k] = -1;
        hi[k] = 1;
        s.add_entry(lo, T(1.0 / denom));
        s.add_entry(hi, T(1.0 / denom));
      }
      s.normalize();
      return s;
    }
  }
  throw std::invalid_argument("make_restriction: unknown kind");
}

// Linear interpolation: tensor product of 1/2 [1 2 1], applied as a
// distribution from coarse points to their fine neighbors.
template <class T = double>
Stencil<T> make_prolongation(int d) {
  if (d < 1 || d > 3) throw std::invalid_argument("make_prolongation: unsupported dimension");
  return detail::tensor3<T>(d, 0.5, 1.0, 0.5);
}

}  // namespace mgs
