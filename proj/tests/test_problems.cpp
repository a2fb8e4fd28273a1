// Benchmark problem construction: operators, boundary fold-in, hierarchies,
// and the reference cycle builder.
#include <doctest.h>

#include "mgs/assemble.hpp"
#include "mgs/problems.hpp"

using namespace mgs;
using std::numbers::pi;

TEST_CASE("problem unknown counts") {
  CHECK(make_poisson_2d(11).rhs.values.size() == 4190209);   // 2047^2
  CHECK(make_poisson_3d(7).rhs.values.size() == 2048383);    // 127^3
  CHECK(make_elasticity_2d(10).rhs.values.size() == 2093058);  // 2 * 1023^2
  CHECK(make_helmholtz_2d(80.0).rhs.values.size() == 16129);   // 127^2
}

TEST_CASE("hierarchies span five rediscretized levels, finest first") {
  const Problem<double> p = make_poisson_2d(7);
  CHECK(p.depth() == 5);
  REQUIRE(p.solver_h.depth() == 5);
  CHECK(p.solver_h.level[0].desc.dims[0] == 127);
  CHECK(p.solver_h.level[4].desc.dims[0] == 7);
  for (int l = 0; l < 5; ++l) {
    const double h = p.solver_h.level[l].desc.spacing[0];
    CHECK(*p.solver_h.level[l].a.block(0, 0).weight_at({0, 0, 0}) ==
          doctest::Approx(4.0 / (h * h)));
  }
}

TEST_CASE("poisson boundary fold-in at a corner point") {
  const Problem<double> p = make_poisson_2d(5);
  const GridDesc& g = p.solver_h.level.front().desc;
  const double h = g.spacing[0];
  auto f = [](double x, double y) {
    return pi * pi * std::cos(pi * x) - 4.0 * pi * pi * std::sin(2.0 * pi * y);
  };
  auto bnd = [](double x, double y) { return std::cos(pi * x) - std::sin(pi * y); };
  // interior point far from the boundary: rhs = f
  const std::array<int, kMaxDim> mid{10, 10, 0};
  CHECK(p.rhs.at(flat_index(g, mid)) ==
        doctest::Approx(f(11 * h, 11 * h)).epsilon(1e-12));
  // corner (0,0): two exterior reads with weight -1/h^2 move to the rhs
  const std::array<int, kMaxDim> corner{0, 0, 0};
  const double want = f(h, h) + (bnd(0.0, h) + bnd(h, 0.0)) / (h * h);
  CHECK(p.rhs.at(flat_index(g, corner)) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("discretization is second-order consistent (manufactured solution)") {
  // u = sin(pi x) sin(pi y) solves -lap u = 2 pi^2 u with zero boundary
  double prev_err = 0.0;
  for (int l = 4; l <= 6; ++l) {
    const GridDesc g = hierarchy_grid(2, l);
    const double h = g.spacing[0];
    const double c = 1.0 / (h * h);
    Stencil<double> s(2);
    s.add_entry({0, 0, 0}, 4.0 * c);
    for (const Offset off : {Offset{-1, 0, 0}, Offset{1, 0, 0}, Offset{0, -1, 0}, Offset{0, 1, 0}})
      s.add_entry(off, -c);
    GridFunction<double> u(g);
    for (std::int64_t q = 0; q < g.npoints(); ++q) {
      const auto i = multi_index(g, q);
      u.values[q] = std::sin(pi * (i[0] + 1) * h) * std::sin(pi * (i[1] + 1) * h);
    }
    const GridFunction<double> au = stencil_apply(s, u);
    double err = 0.0;
    for (std::int64_t q = 0; q < g.npoints(); ++q)
      err = std::max(err, std::abs(au.values[q] - 2.0 * pi * pi * u.values[q]));
    if (l > 4) CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.1));
    prev_err = err;
  }
}

TEST_CASE("elasticity operator is symmetric positive definite") {
  const Problem<double> p = make_elasticity_2d(5);
  // check the assembled system on the two coarsest levels (3x3, 7x7)
  for (int l : {4, 3}) {
    const auto& lv = p.solver_h.level[l];
    const DenseMatrix<double> m = assemble_matrix(lv.a, lv.desc);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<DenseMatrix<double>> es(m);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  // rhs is driven purely by the boundary data of the second component
  const GridDesc& g = p.solver_h.level.front().desc;
  double comp0 = 0.0, comp1 = 0.0;
  for (std::int64_t q = 0; q < g.npoints(); ++q) {
    comp0 = std::max(comp0, std::abs(p.rhs.at(q, 0)));
    comp1 = std::max(comp1, std::abs(p.rhs.at(q, 1)));
  }
  CHECK(comp0 > 0.0);  // cross-derivative couples g into the first equation
  CHECK(comp1 > 0.0);
}

TEST_CASE("elasticity cross-derivative block") {
  const Problem<double> p = make_elasticity_2d(5);
  const auto& lv = p.solver_h.level.front();
  const double h = lv.desc.spacing[0];
  const double m = (195.0 + 130.0) / (4.0 * h * h);
  const Stencil<double>& cross = lv.a.block(0, 1);
  CHECK(cross.entries.size() == 4);
  CHECK(*cross.weight_at({1, 1, 0}) == doctest::Approx(-m));
  CHECK(*cross.weight_at({-1, 1, 0}) == doctest::Approx(m));
  CHECK(*cross.weight_at({1, -1, 0}) == doctest::Approx(m));
  CHECK(*cross.weight_at({-1, -1, 0}) == doctest::Approx(-m));
}

TEST_CASE("helmholtz grids, shift, and radiation closures") {
  const auto p = make_helmholtz_2d(80.0);
  CHECK(p.l_max == 7);
  CHECK(p.epsilon == 1e-7);
  CHECK(p.preconditioned);
  CHECK(p.mode == FitnessMode::TimeIters);
  CHECK(p.solver_h.coarse.kind == KrylovKind::Bicgstab);
  CHECK(make_helmholtz_2d(320.0).l_max == 9);
  CHECK(make_helmholtz_2d(320.0).epsilon == 1e-6);
  CHECK_THROWS_AS((void)make_helmholtz_2d(100.0), std::invalid_argument);

  const auto& m = p.solver_h.level.front().a;  // shifted operator
  const auto& a = p.outer_a;
  const double h = p.solver_h.level.front().desc.spacing[0];
  const double kh = 80.0 * h;
  const std::complex<double> shift =
      *m.block(0, 0).weight_at({0, 0, 0}) - *a.block(0, 0).weight_at({0, 0, 0});
  CHECK(std::abs(shift - std::complex<double>(0.0, -0.5 * kh * kh / (h * h))) < 1e-9);

  // Robin closures on both x sides, identical for A and M
  REQUIRE(a.closures.size() == 2);
  REQUIRE(m.closures.size() == 2);
  const std::complex<double> kappa =
      1.0 / (std::complex<double>(1.0 - 0.5 * kh * kh, -kh));
  for (int side = 0; side < 2; ++side) {
    CHECK(a.closures[side].axis == 0);
    CHECK(a.closures[side].side == side);
    CHECK(std::abs(a.closures[side].center_delta - (-kappa / (h * h))) < 1e-9);
    CHECK(std::abs(m.closures[side].center_delta - a.closures[side].center_delta) == 0.0);
  }

  // centered unit load scaled by 1/h^2
  int nonzero = 0;
  for (const auto& v : p.rhs.values)
    if (v != std::complex<double>{}) ++nonzero;
  CHECK(nonzero == 1);
  const GridDesc& g = p.solver_h.level.front().desc;
  CHECK(p.rhs.at(flat_index(g, {63, 63, 0})) == std::complex<double>(1.0 / (h * h), 0.0));
}

TEST_CASE("reference cycle structure") {
  auto count = [](const Program& p) {
    int upd = 0, coarsen = 0, solves = 0;
    for (const Instr& in : p.instrs) (in.kind == Instr::Update ? upd : coarsen)++;
    for (const Expr& e : p.exprs)
      if (e.kind == Expr::Apply && e.op.kind == OpKind::CoarseSolve) ++solves;
    return std::tuple{upd, coarsen, solves};
  };
  // two grids: smoothing around a single solver update
  auto [u2, c2, s2] = count(reference_cycle(2, 1, CycleKind::V, 1, 1,
                                            SmootherKind::JacobiPointwise, 18));
  CHECK(u2 == 3);
  CHECK(c2 == 0);
  CHECK(s2 == 1);
  // three grids, V(1,1): 3 updates on the fine level, 3 on the coarse one
  auto [u3, c3, s3] = count(reference_cycle(3, 1, CycleKind::V, 1, 1,
                                            SmootherKind::RBGaussSeidel, 21));
  CHECK(u3 == 6);
  CHECK(c3 == 1);
  CHECK(s3 == 1);
  // W-cycle at three grids applies the coarsest solver twice
  auto [uw, cw, sw] = count(reference_cycle(3, 1, CycleKind::W, 1, 1,
                                            SmootherKind::JacobiPointwise, 18));
  CHECK(sw == 2);
  CHECK(cw == 1);
  CHECK(uw == 9);
  // F-cycle at three grids: one F descent + one V descent on the middle level
  auto [uf, cf, sf] = count(reference_cycle(3, 1, CycleKind::F, 1, 1,
                                            SmootherKind::JacobiPointwise, 18));
  CHECK(sf == 2);
  CHECK(cf == 1);

  // systems use the collective diagonal inverse for red-black sweeps
  const Program sys = reference_cycle(2, 2, CycleKind::V, 1, 0,
                                      SmootherKind::RBGaussSeidel, 22);
  bool collective = false;
  for (const Expr& e : sys.exprs)
    if (e.kind == Expr::Apply && e.op.kind == OpKind::DiagInvCollective) collective = true;
  CHECK(collective);
}

TEST_CASE("relaxation index lookup") {
  CHECK(omega_index_of(1.15) == 21);
  CHECK(omega_index_of(0.1) == 0);
  CHECK(omega_index_of(1.9) == kOmegaIndexMax);
  CHECK_THROWS_AS((void)omega_index_of(0.07), std::invalid_argument);
  CHECK_THROWS_AS((void)omega_index_of(2.0), std::invalid_argument);
}
