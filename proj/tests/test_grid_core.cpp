// Grid, stencil-algebra, and transfer kernels checked against a dense
// Eigen oracle and against their serial reference implementations.
#include <doctest.h>

#include <complex>

#include "mgs/assemble.hpp"
#include "mgs/rng.hpp"
#include "mgs/transfer.hpp"

using namespace mgs;

namespace {

Stencil<double> random_stencil(int d, int max_reach, int entries, Rng& rng) {
  Stencil<double> s(d);
  for (int e = 0; e < entries; ++e) {
    Offset off{0, 0, 0};
    for (int k = 0; k < d; ++k)
      off[k] = static_cast<int>(rng.uniform_int(2 * max_reach + 1)) - max_reach;
    if (!s.weight_at(off)) s.add_entry(off, rng.uniform_real() * 2.0 - 1.0);
  }
  s.normalize();
  return s;
}

GridFunction<double> random_function(const GridDesc& g, Rng& rng, int comps = 1) {
  GridFunction<double> u(g, comps);
  for (auto& v : u.values) v = rng.uniform_real() * 2.0 - 1.0;
  return u;
}

double max_abs_diff(const DenseMatrix<double>& a, const DenseMatrix<double>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("flat/multi index round trip, x fastest") {
  GridDesc g;
  g.d = 3;
  g.dims = {3, 4, 5};
  for (std::int64_t p = 0; p < g.npoints(); ++p)
    CHECK(flat_index(g, multi_index(g, p)) == p);
  // neighbor in x is adjacent in memory
  CHECK(flat_index(g, {1, 2, 3}) + 1 == flat_index(g, {2, 2, 3}));
  // stride in y is dims[0]
  CHECK(flat_index(g, {1, 3, 3}) - flat_index(g, {1, 2, 3}) == 3);
}

TEST_CASE("hierarchy grids") {
  GridDesc g = hierarchy_grid(2, 5);
  CHECK(g.dims[0] == 31);
  CHECK(g.dims[1] == 31);
  CHECK(g.spacing[0] == doctest::Approx(1.0 / 32));
  CHECK(g.npoints() == 31 * 31);
}

TEST_CASE("component-planar storage") {
  GridDesc g = hierarchy_grid(2, 2);
  GridFunction<double> u(g, 3);
  u.at(4, 2) = 7.0;
  CHECK(u.values[2 * g.npoints() + 4] == 7.0);
}

TEST_CASE("norm2 and dotc match naive accumulation") {
  Rng rng(7);
  std::vector<double> a(1001), b(1001);
  for (auto& v : a) v = rng.uniform_real() - 0.5;
  for (auto& v : b) v = rng.uniform_real() - 0.5;
  double sn = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sn += a[i] * a[i];
    sd += a[i] * b[i];
  }
  CHECK(norm2(a) == doctest::Approx(std::sqrt(sn)).epsilon(1e-13));
  CHECK(dotc(a, b) == doctest::Approx(sd).epsilon(1e-13));

  std::vector<std::complex<double>> ca{{1, 2}, {3, -4}};
  std::vector<std::complex<double>> cb{{0, 1}, {2, 2}};
  const auto got = dotc(ca, cb);
  const auto want = std::conj(ca[0]) * cb[0] + std::conj(ca[1]) * cb[1];
  CHECK(std::abs(got - want) < 1e-14);
}

TEST_CASE("stencil algebra is a matrix-algebra homomorphism (periodic oracle)") {
  Rng rng(11);
  GridDesc g;
  g.d = 2;
  g.dims = {5, 7};
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = random_stencil(2, 2, 4, rng);
    const auto b = random_stencil(2, 2, 4, rng);
    const auto A = assemble_matrix(a, g, Boundary::Periodic);
    const auto B = assemble_matrix(b, g, Boundary::Periodic);
    CHECK(max_abs_diff(assemble_matrix(stencil_add(a, b), g, Boundary::Periodic), A + B) <
          1e-13);
    CHECK(max_abs_diff(assemble_matrix(stencil_sub(a, b), g, Boundary::Periodic), A - B) <
          1e-13);
    CHECK(max_abs_diff(assemble_matrix(stencil_mult(a, b), g, Boundary::Periodic), A * B) <
          1e-13);
    CHECK(max_abs_diff(assemble_matrix(stencil_scale(2.5, a), g, Boundary::Periodic),
                       2.5 * A) < 1e-13);
  }
}

TEST_CASE("1d second-difference squared") {
  Stencil<double> s(1);
  s.add_entry({-1, 0, 0}, 1.0);
  s.add_entry({0, 0, 0}, -2.0);
  s.add_entry({1, 0, 0}, 1.0);
  Stencil<double> sq = stencil_mult(s, s);
  REQUIRE(sq.entries.size() == 5);
  const double want[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
  for (int k = 0; k < 5; ++k) {
    const double* w = sq.weight_at({k - 2, 0, 0});
    REQUIRE(w != nullptr);
    CHECK(*w == doctest::Approx(want[k]));
  }
}

TEST_CASE("diag / lower / upper split the stencil") {
  Rng rng(13);
  const auto s = random_stencil(3, 1, 10, rng);
  GridDesc g;
  g.d = 3;
  g.dims = {3, 3, 3};
  const auto sum = stencil_add(stencil_add(lower(s), diag(s)), upper(s));
  CHECK(max_abs_diff(assemble_matrix(sum, g, Boundary::DirichletZero),
                     assemble_matrix(s, g, Boundary::DirichletZero)) < 1e-14);
  // assembled parts are strictly triangular / diagonal
  const auto L = assemble_matrix(lower(s), g, Boundary::DirichletZero);
  const auto U = assemble_matrix(upper(s), g, Boundary::DirichletZero);
  const auto D = assemble_matrix(diag(s), g, Boundary::DirichletZero);
  for (int i = 0; i < L.rows(); ++i)
    for (int j = 0; j < L.cols(); ++j) {
      if (j >= i) CHECK(L(i, j) == 0.0);
      if (j <= i) CHECK(U(i, j) == 0.0);
      if (j != i) CHECK(D(i, j) == 0.0);
    }
}

TEST_CASE("diag keeps a zero placeholder; diag_inv rejects it") {
  Stencil<double> s(2);
  s.add_entry({1, 0, 0}, 3.0);
  const auto d = diag(s);
  REQUIRE(d.entries.size() == 1);
  CHECK(d.entries[0].off == Offset{0, 0, 0});
  CHECK(d.entries[0].weight == 0.0);
  CHECK_THROWS_AS((void)diag_inv(s), std::domain_error);

  Stencil<double> ok(2);
  ok.add_entry({0, 0, 0}, 4.0);
  CHECK(*diag_inv(ok).weight_at({0, 0, 0}) == doctest::Approx(0.25));
}

TEST_CASE("stencil_apply equals dense multiply; serial == parallel") {
  Rng rng(17);
  GridDesc g;
  g.d = 2;
  g.dims = {6, 5};
  for (Boundary bc : {Boundary::DirichletZero, Boundary::Periodic}) {
    const auto s = random_stencil(2, 2, 5, rng);
    const auto u = random_function(g, rng);
    const auto par = stencil_apply(s, u, bc);
    const auto ser = serial::stencil_apply(s, u, bc);
    for (std::size_t i = 0; i < par.values.size(); ++i)
      CHECK(par.values[i] == ser.values[i]);
    const DenseVector<double> want = assemble_matrix(s, g, bc) * to_dense(u);
    for (std::int64_t p = 0; p < g.npoints(); ++p)
      CHECK(par.values[p] == doctest::Approx(want(p)).epsilon(1e-13));
  }
}

TEST_CASE("blocked operator apply equals dense block matrix") {
  Rng rng(19);
  GridDesc g;
  g.d = 2;
  g.dims = {4, 4};
  Operator<double> a(2, {random_stencil(2, 1, 4, rng), random_stencil(2, 1, 4, rng),
                         random_stencil(2, 1, 4, rng), random_stencil(2, 1, 4, rng)});
  a.closures.push_back({0, 0, 0.5});
  a.closures.push_back({1, 1, -0.25});
  const auto u = random_function(g, rng, 2);
  const auto got = operator_apply(a, u);
  const DenseVector<double> want = assemble_matrix(a, g) * to_dense(u);
  for (std::size_t i = 0; i < got.values.size(); ++i)
    CHECK(got.values[i] ==
          doctest::Approx(want(static_cast<Eigen::Index>(i))).epsilon(1e-13));
}

TEST_CASE("transfer stencil weights") {
  const auto fw2 = make_restriction<double>(2, RestrictionKind::FullWeighting);
  CHECK(fw2.entries.size() == 9);
  CHECK(*fw2.weight_at({0, 0, 0}) == doctest::Approx(0.25));
  CHECK(*fw2.weight_at({1, 1, 0}) == doctest::Approx(1.0 / 16));
  const auto hw2 = make_restriction<double>(2, RestrictionKind::HalfWeighting);
  CHECK(hw2.entries.size() == 5);
  CHECK(*hw2.weight_at({0, 0, 0}) == doctest::Approx(0.5));
  CHECK(*hw2.weight_at({0, 1, 0}) == doctest::Approx(0.125));
  const auto hw3 = make_restriction<double>(3, RestrictionKind::HalfWeighting);
  CHECK(hw3.entries.size() == 7);
  CHECK(*hw3.weight_at({0, 0, 0}) == doctest::Approx(0.5));
  CHECK(*hw3.weight_at({0, 0, 1}) == doctest::Approx(1.0 / 12));
  const auto p3 = make_prolongation<double>(3);
  CHECK(p3.entries.size() == 27);
  CHECK(*p3.weight_at({0, 0, 0}) == doctest::Approx(1.0));
  CHECK(*p3.weight_at({1, 1, 1}) == doctest::Approx(0.125));
}

TEST_CASE("full weighting is the scaled transpose of linear interpolation") {
  for (int d = 1; d <= 3; ++d) {
    const GridDesc fine = hierarchy_grid(d, 3);
    const GridDesc coarse = hierarchy_grid(d, 2);
    const auto R = assemble_restriction(
        make_restriction<double>(d, RestrictionKind::FullWeighting), coarse, fine);
    const auto P = assemble_prolongation(make_prolongation<double>(d), fine, coarse);
    const double scale = std::pow(0.5, d);
    CHECK(max_abs_diff(R, scale * P.transpose()) < 1e-14);
  }
}

TEST_CASE("transfer kernels match their matrices; serial == parallel") {
  Rng rng(23);
  for (int d = 1; d <= 3; ++d) {
    const GridDesc fine = hierarchy_grid(d, 3);
    const GridDesc coarse = hierarchy_grid(d, 2);
    const auto r = make_restriction<double>(d, RestrictionKind::FullWeighting);
    const auto pr = make_prolongation<double>(d);
    const auto uf = random_function(fine, rng);
    const auto uc = random_function(coarse, rng);

    const auto rc = restrict_apply(r, uf, coarse);
    const auto rc_ser = serial::restrict_apply(r, uf, coarse);
    const DenseVector<double> rc_want = assemble_restriction(r, coarse, fine) * to_dense(uf);
    for (std::int64_t p = 0; p < coarse.npoints(); ++p) {
      CHECK(rc.values[p] == rc_ser.values[p]);
      CHECK(rc.values[p] == doctest::Approx(rc_want(p)).epsilon(1e-13));
    }

    const auto pf = prolong_apply(pr, uc, fine);
    const auto pf_ser = serial::prolong_apply(pr, uc, fine);
    const DenseVector<double> pf_want =
        assemble_prolongation(pr, fine, coarse) * to_dense(uc);
    for (std::int64_t p = 0; p < fine.npoints(); ++p) {
      CHECK(pf.values[p] == doctest::Approx(pf_ser.values[p]).epsilon(1e-14));
      CHECK(pf.values[p] == doctest::Approx(pf_want(p)).epsilon(1e-13));
    }
  }
}

TEST_CASE("5-point Laplacian on the 3x3 interior grid assembles exactly") {
  const GridDesc g = hierarchy_grid(2, 2);  // h = 1/4
  const double h2 = 16.0;
  Stencil<double> a(2);
  a.add_entry({0, 0, 0}, 4.0 * h2);
  a.add_entry({-1, 0, 0}, -h2);
  a.add_entry({1, 0, 0}, -h2);
  a.add_entry({0, -1, 0}, -h2);
  a.add_entry({0, 1, 0}, -h2);
  const auto M = assemble_matrix(a, g);
  DenseMatrix<double> want = DenseMatrix<double>::Zero(9, 9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const int i = r * 3 + c;
      want(i, i) = 4.0 * h2;
      if (c > 0) want(i, i - 1) = -h2;
      if (c < 2) want(i, i + 1) = -h2;
      if (r > 0) want(i, i - 3) = -h2;
      if (r < 2) want(i, i + 3) = -h2;
    }
  CHECK(max_abs_diff(M, want) == 0.0);
}
