// Smoothers and Krylov solvers against dense linear-algebra oracles.
#include <doctest.h>

#include "mgs/assemble.hpp"
#include "mgs/krylov.hpp"
#include "mgs/rng.hpp"
#include "mgs/smoother.hpp"

using namespace mgs;

namespace {

Stencil<double> laplace5(double h) {
  const double h2 = 1.0 / (h * h);
  Stencil<double> a(2);
  a.add_entry({0, 0, 0}, 4.0 * h2);
  a.add_entry({-1, 0, 0}, -h2);
  a.add_entry({1, 0, 0}, -h2);
  a.add_entry({0, -1, 0}, -h2);
  a.add_entry({0, 1, 0}, -h2);
  a.normalize();
  return a;
}

GridFunction<double> random_function(const GridDesc& g, Rng& rng, int comps = 1) {
  GridFunction<double> u(g, comps);
  for (auto& v : u.values) v = rng.uniform_real() * 2.0 - 1.0;
  return u;
}

// Random diagonally dominant 2-component operator (so every pointwise and
// block sub-matrix is invertible).
Operator<double> random_system(Rng& rng) {
  std::vector<Stencil<double>> blocks;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Stencil<double> s(2);
      s.add_entry({0, 0, 0}, i == j ? 10.0 + rng.uniform_real() : rng.uniform_real());
      s.add_entry({1, 0, 0}, rng.uniform_real() - 0.5);
      s.add_entry({-1, 0, 0}, rng.uniform_real() - 0.5);
      s.add_entry({0, 1, 0}, rng.uniform_real() - 0.5);
      s.add_entry({0, -1, 0}, rng.uniform_real() - 0.5);
      s.normalize();
      blocks.push_back(s);
    }
  return Operator<double>(2, std::move(blocks));
}

}  // namespace

TEST_CASE("relaxation-factor table") {
  CHECK(omega_of(0) == doctest::Approx(0.1));
  CHECK(omega_of(18) == doctest::Approx(1.0));
  CHECK(omega_of(kOmegaIndexMax) == doctest::Approx(1.9));
}

TEST_CASE("weighted Jacobi equals its dense formula") {
  Rng rng(3);
  const GridDesc g = hierarchy_grid(2, 3);
  const Operator<double> a(laplace5(g.spacing[0]));
  const auto A = assemble_matrix(a, g);
  const auto x = random_function(g, rng);
  const auto b = random_function(g, rng);
  const double omega = omega_of(14);
  const auto got = smooth_jacobi(a, x, b, omega);
  const DenseVector<double> want =
      to_dense(x) + omega * (A.diagonal().asDiagonal().inverse() *
                             (to_dense(b) - A * to_dense(x)));
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(got.values[p] == doctest::Approx(want(p)).epsilon(1e-13));
}

TEST_CASE("red-black Gauss-Seidel equals two masked half-sweeps of the oracle") {
  Rng rng(5);
  const GridDesc g = hierarchy_grid(2, 3);
  const Operator<double> a(laplace5(g.spacing[0]));
  const auto A = assemble_matrix(a, g);
  const auto x = random_function(g, rng);
  const auto b = random_function(g, rng);
  const double omega = 1.15;

  DenseVector<double> v = to_dense(x);
  for (int color = 0; color < 2; ++color) {
    const DenseVector<double> corr =
        A.diagonal().asDiagonal().inverse() * (to_dense(b) - A * v);
    for (std::int64_t p = 0; p < g.npoints(); ++p) {
      const auto i = multi_index(g, p);
      if (((i[0] + i[1]) & 1) == color) v(p) += omega * corr(p);
    }
  }
  const auto got = smooth_rbgs(a, x, b, omega);
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(got.values[p] == doctest::Approx(v(p)).epsilon(1e-13));
}

TEST_CASE("red-black Gauss-Seidel on the Laplacian contracts faster than Jacobi") {
  const GridDesc g = hierarchy_grid(2, 4);
  const Operator<double> a(laplace5(g.spacing[0]));
  Rng rng(7);
  GridFunction<double> b(g);
  auto err_after = [&](auto&& step) {
    GridFunction<double> x = random_function(g, rng);
    const double e0 = norm2(x);
    for (int it = 0; it < 30; ++it) x = step(x);
    return norm2(x) / e0;
  };
  const double ej = err_after([&](const auto& x) { return smooth_jacobi(a, x, b, 0.8); });
  const double eg = err_after([&](const auto& x) { return smooth_rbgs(a, x, b, 1.0); });
  CHECK(eg < ej);
  CHECK(eg < 1.0);
}

TEST_CASE("collective Jacobi inverts the pointwise component block") {
  Rng rng(9);
  const GridDesc g = hierarchy_grid(2, 2);
  const Operator<double> a = random_system(rng);
  const auto c = random_function(g, rng, 2);
  const auto got = apply_diag_inv_collective(a, c);
  Eigen::Matrix2d d;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) d(i, j) = *a.block(i, j).weight_at({0, 0, 0});
  for (std::int64_t p = 0; p < g.npoints(); ++p) {
    const Eigen::Vector2d sol = d.lu().solve(Eigen::Vector2d(c.at(p, 0), c.at(p, 1)));
    CHECK(got.at(p, 0) == doctest::Approx(sol(0)).epsilon(1e-13));
    CHECK(got.at(p, 1) == doctest::Approx(sol(1)).epsilon(1e-13));
  }
  // decoupled variant uses only the diagonal blocks
  const auto dec = apply_diag_inv_decoupled(a, c);
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(dec.at(p, 0) == doctest::Approx(c.at(p, 0) / d(0, 0)).epsilon(1e-13));
}

TEST_CASE("block-Jacobi correction equals the dense block-diagonal inverse") {
  Rng rng(11);
  const GridDesc g = hierarchy_grid(2, 3);  // 7x7: ragged 3x1 tiling
  const Operator<double> a(laplace5(g.spacing[0]));
  const auto A = assemble_matrix(a, g);
  const auto c = random_function(g, rng);
  const std::array<int, kMaxDim> shape{3, 1, 1};
  const auto got = apply_block_inv(a, c, shape);

  // dense oracle: zero all couplings between different tiles, then invert
  DenseMatrix<double> bd = DenseMatrix<double>::Zero(A.rows(), A.cols());
  auto tile = [&](std::int64_t p) {
    const auto i = multi_index(g, p);
    return std::pair{i[0] / 3, i[1]};
  };
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    for (std::int64_t q = 0; q < g.npoints(); ++q)
      if (tile(p) == tile(q)) bd(p, q) = A(p, q);
  const DenseVector<double> want = bd.partialPivLu().solve(to_dense(c));
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(got.values[p] == doctest::Approx(want(p)).epsilon(1e-12));
}

TEST_CASE("block-Jacobi with closures matches the closured dense operator") {
  Rng rng(13);
  const GridDesc g = hierarchy_grid(2, 2);
  Operator<double> a(laplace5(g.spacing[0]));
  a.closures.push_back({0, 0, 3.5});
  a.closures.push_back({0, 1, -1.25});
  const auto A = assemble_matrix(a, g);
  const auto c = random_function(g, rng);
  const std::array<int, kMaxDim> shape{1, 1, 1};  // pointwise: block diag = diag(A)
  const auto got = apply_block_inv(a, c, shape);
  const DenseVector<double> want =
      A.diagonal().asDiagonal().inverse() * to_dense(c);
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(got.values[p] == doctest::Approx(want(p)).epsilon(1e-13));
  // decoupled Jacobi agrees on the scalar case
  const auto dec = apply_diag_inv_decoupled(a, c);
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(dec.values[p] == doctest::Approx(want(p)).epsilon(1e-13));
}

TEST_CASE("conjugate gradients solves the SPD Laplacian") {
  Rng rng(17);
  const GridDesc g = hierarchy_grid(2, 3);
  const Operator<double> a(laplace5(g.spacing[0]));
  GridFunction<double> b = random_function(g, rng);
  std::vector<double> x(b.values.size(), 0.0);
  auto apply = [&](const std::vector<double>& v) {
    GridFunction<double> u(g);
    u.values = v;
    return operator_apply(a, u).values;
  };
  const KrylovResult res = cg_solve<double>(apply, b.values, x, 1e-12, 500);
  CHECK(res.converged);
  CHECK(res.iterations <= static_cast<int>(b.values.size()));
  auto ax = apply(x);
  double err = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) err = std::max(err, std::abs(ax[i] - b.values[i]));
  CHECK(err < 1e-9 * norm2(b));
}

TEST_CASE("BiCGSTAB solves a nonsymmetric system; preconditioning reduces iterations") {
  Rng rng(19);
  const GridDesc g = hierarchy_grid(2, 3);
  Stencil<double> s = laplace5(g.spacing[0]);
  s.add_entry({1, 0, 0}, 0.0);  // no-op keep structure
  // add convection to break symmetry
  Stencil<double> conv(2);
  conv.add_entry({1, 0, 0}, 30.0);
  conv.add_entry({-1, 0, 0}, -30.0);
  const Operator<double> a(stencil_add(s, conv));
  GridFunction<double> b = random_function(g, rng);
  auto apply = [&](const std::vector<double>& v) {
    GridFunction<double> u(g);
    u.values = v;
    return operator_apply(a, u).values;
  };
  auto identity = [](const std::vector<double>& v) { return v; };
  auto jacobi_pc = [&](const std::vector<double>& v) {
    GridFunction<double> u(g);
    u.values = v;
    return apply_diag_inv_decoupled(a, u).values;
  };
  std::vector<double> x0(b.values.size(), 0.0), x1 = x0;
  const KrylovResult plain = bicgstab_solve<double>(apply, identity, b.values, x0, 1e-10, 1000);
  const KrylovResult pc = bicgstab_solve<double>(apply, jacobi_pc, b.values, x1, 1e-10, 1000);
  CHECK(plain.converged);
  CHECK(pc.converged);
  auto ax = apply(x1);
  double err = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) err = std::max(err, std::abs(ax[i] - b.values[i]));
  CHECK(err < 1e-7 * norm2(b));
}

TEST_CASE("krylov_solve default iteration cap and spec dispatch") {
  const GridDesc g = hierarchy_grid(1, 3);
  Stencil<double> s(1);
  s.add_entry({0, 0, 0}, 2.0);
  s.add_entry({-1, 0, 0}, -1.0);
  s.add_entry({1, 0, 0}, -1.0);
  const Operator<double> a(s);
  std::vector<double> b(g.npoints(), 1.0), x(g.npoints(), 0.0);
  auto apply = [&](const std::vector<double>& v) {
    GridFunction<double> u(g);
    u.values = v;
    return operator_apply(a, u).values;
  };
  CoarseSolverSpec spec;  // CG, 1e-12, 2n cap
  const KrylovResult res = krylov_solve(spec, apply, b, x);
  CHECK(res.converged);
  spec.kind = KrylovKind::Bicgstab;
  std::vector<double> x2(g.npoints(), 0.0);
  CHECK(krylov_solve(spec, apply, b, x2).converged);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(x[i] == doctest::Approx(x2[i]).epsilon(1e-8));
}
