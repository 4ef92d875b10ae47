#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kamred/error.hpp"
#include "kamred/langer.hpp"

using namespace kamred;

TEST_CASE("phase integral reference values for x^4, lambda = 1") {
  Potential V(PotentialSpec::monomial(2.0));
  // int_0^1 sqrt(1 - t^4) dt and int_1^2 sqrt(t^4 - 1) dt, 30-digit quadrature.
  const cplx z0 = zeta(V, 1.0, 1.0, 0.0);
  CHECK(z0.real() == doctest::Approx(-0.874019184764040).epsilon(1e-11));
  CHECK(z0.imag() == 0.0);
  const cplx z2 = zeta(V, 1.0, 1.0, 2.0);
  CHECK(z2.real() == 0.0);
  CHECK(z2.imag() == doctest::Approx(2.04344267482579).epsilon(1e-11));
  CHECK(zeta(V, 1.0, 1.0, 1.0) == cplx(0.0, 0.0));
}

TEST_CASE("cumulative samples match pointwise zeta and are monotone") {
  Potential V(PotentialSpec::monomial(2.0));
  const double lam = 50.0;
  const double X = V.turning_point(lam);
  std::vector<double> xs;
  for (int i = 0; i <= 300; ++i) xs.push_back(0.01 * i);
  const auto z = zeta_samples(V, lam, X, xs);
  double prev = -1.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const cplx ref = zeta(V, lam, X, xs[k]);
    CHECK(std::abs(z[k] - ref) <= 1e-11 * std::max(1.0, std::abs(ref)));
    if (xs[k] < X) {
      CHECK(z[k].real() < 0.0);
      CHECK(z[k].imag() == 0.0);
      if (prev >= 0.0) CHECK(std::abs(z[k]) < prev);
      prev = std::abs(z[k]);
    } else {
      CHECK(z[k].imag() > 0.0);
      CHECK(z[k].real() == 0.0);
    }
  }
}

TEST_CASE("inconsistent turning point is a branch error") {
  Potential V(PotentialSpec::monomial(2.0));
  try {
    zeta(V, 1.0, 1.5, 0.0);
    FAIL("expected a branch error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Branch);
  }
  CHECK_THROWS_AS(zeta(V, 1.0, 1.0, -0.5), Error);
}

TEST_CASE("index below n0 is refused") {
  Potential V(PotentialSpec::monomial(2.0));
  const Grid grid{8.0, 2001};
  const auto basis = solve_spectrum(V, grid, 10);
  const int n0 = first_turning_index(V, basis.lambdas);
  CHECK(n0 >= 2);
  CHECK(basis.lambda(n0) >= V(V.threshold_radius()));
  CHECK(basis.lambda(n0 - 1) < V(V.threshold_radius()));
  try {
    make_frame(V, grid, 1, basis.lambda(1));
    FAIL("expected unsupported-index");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedIndex);
  }
}

TEST_CASE("Langer approximation at n = 30") {
  Potential V(PotentialSpec::monomial(2.0));
  const Grid grid = grid_for_energy(V, 1.1 * weyl_estimate(V.spec(), 30), 80);
  const Eigenpair pair = solve_eigenpair_extrapolated(V, grid, 30);
  TurningPointFrame frame = make_frame(V, grid, 30, pair.lambda);
  const LangerApprox a = langer_eigenfunction(frame, V, grid, pair.h);
  CHECK(a.err_sup < 0.05);
  CHECK(a.imag_residue < 1e-9);
  CHECK(std::abs(inner(grid, a.psi, a.psi) - 1.0) < 1e-12);
  CHECK(frame.Cn == a.Cn);
  // Odd index: psi is odd.
  CHECK(a.psi(grid.center()) == 0.0);
  CHECK(a.psi(grid.center() + 5) == -a.psi(grid.center() - 5));
}

TEST_CASE("C_n scaling, boundedness and uniform turning-point constants") {
  PotentialSpec spec;
  spec.ell = 2.0;
  spec.w = {0.5};
  Potential V(spec);
  const Grid g0{8.0, 2001};
  const int n0 = first_turning_index(V, solve_spectrum(V, g0, 12).lambdas);
  REQUIRE(n0 > 0);
  std::vector<int> ns;
  for (int n = n0 + 10; n <= n0 + 40; n += 10) ns.push_back(n);
  const auto rows = langer_check(V, ns, 60);
  double cmin = 1e300, cmax = 0.0, hmin = 1e300, hmax = 0.0;
  double a1min = 1e300, a1max = 0.0, A1min = 1e300, A1max = 0.0;
  for (const auto& r : rows) {
    cmin = std::min(cmin, r.Cn_scaled);
    cmax = std::max(cmax, r.Cn_scaled);
    hmin = std::min(hmin, r.h_sup);
    hmax = std::max(hmax, r.h_sup);
    a1min = std::min(a1min, r.bounds.a1);
    a1max = std::max(a1max, r.bounds.a1);
    A1min = std::min(A1min, r.bounds.A1);
    A1max = std::max(A1max, r.bounds.A1);
    CHECK(r.bounds.ok);
    CHECK(r.bounds.a1 > 0.0);
    CHECK(r.bounds.A1 > 0.0);
    CHECK(r.bounds.a2 >= r.bounds.a1);
    CHECK(r.bounds.A2 >= r.bounds.A1);
  }
  CHECK(cmax / cmin < 1.2);
  CHECK(hmax / hmin < 2.0);
  CHECK(a1max / a1min < 1.1);
  CHECK(A1max / A1min < 1.1);
}

TEST_CASE("turning-point ratios for the monomial") {
  Potential V(PotentialSpec::monomial(2.0));
  const Grid grid{8.0, 2001};
  for (double lam : {100.0, 1000.0}) {
    TurningPointFrame frame = make_frame(V, grid, 20, lam);
    const auto r = verify_turning_bounds(frame, V);
    CHECK(r.taylor_ratio == doctest::Approx(4.0).epsilon(1e-5));
    CHECK(r.origin_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.ok);
    CHECK(frame.a1 == r.a1);
    // Monomial: the ratios are scale invariant.
    CHECK(r.a1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.A1 == doctest::Approx(0.874019184764040).epsilon(1e-6));
  }
}

TEST_CASE("error law slope on a short scan") {
  Potential V(PotentialSpec::monomial(2.0));
  const auto rows = langer_check(V, {8, 20, 50, 130, 216}, 120);
  const double slope = error_law_slope(rows);
  MESSAGE("slope = " << slope);
  CHECK(rows.back().X / rows.front().X >= 3.0);
  CHECK(slope >= -3.75);
  CHECK(slope <= -2.25);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].err_l2 < rows[i - 1].err_l2);
  std::ostringstream os;
  write_langer_csv(os, rows);
  CHECK(os.str().rfind("n,X_n,e_n,a1,a2,A1,A2", 0) == 0);
}
