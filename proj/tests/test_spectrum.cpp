#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kamred/error.hpp"
#include "kamred/spectrum.hpp"

using namespace kamred;

namespace {

int sign_changes(const Eigen::VectorXd& h) {
  const double tol = 1e-6 * h.cwiseAbs().maxCoeff();
  int changes = 0;
  int last = 0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (std::abs(h(i)) < tol) continue;
    const int s = h(i) > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace

TEST_CASE("low quartic eigenvalues") {
  Potential V(PotentialSpec::monomial(2.0));
  const auto basis = solve_spectrum(V, Grid{8.0, 4001}, 2);
  // Literature values for -d2 + x^4.
  CHECK(basis.lambda(1) == doctest::Approx(1.0603620904841829).epsilon(1e-4));
  CHECK(basis.lambda(2) == doctest::Approx(3.7996730298013941).epsilon(1e-4));
  CHECK(basis.parity[0] == Parity::Even);
  CHECK(basis.parity[1] == Parity::Odd);
  CHECK(std::abs(inner(basis.grid, basis.h(1), basis.h(2))) < 1e-10);
}

TEST_CASE("basis invariants for J = 40") {
  Potential V(PotentialSpec::monomial(2.0));
  const Grid grid{8.0, 4001};
  const auto basis = solve_spectrum(V, grid, 40);
  CHECK(basis.lambda(1) > 0.0);
  double worst = 0.0;
  for (int i = 1; i <= 40; ++i) {
    if (i > 1) CHECK(basis.lambda(i) > basis.lambda(i - 1));
    CHECK(sign_changes(basis.h(i)) == i - 1);
    CHECK(basis.parity[i - 1] == (i % 2 ? Parity::Even : Parity::Odd));
    CHECK(basis.h(i)(grid.center() + 1) > 0.0);
    for (int j = 1; j <= 40; ++j) {
      worst = std::max(worst, std::abs(inner(grid, basis.h(i), basis.h(j)) - (i == j ? 1.0 : 0.0)));
    }
    CHECK(std::abs(inner(grid, basis.h(i), basis.h(i)) - 1.0) < 1e-10);
  }
  CHECK(worst < 1e-8);

  for (int j = 1; j <= 40; ++j) {
    const double gap = 1e-6 * basis.lambda(j);
    CHECK(sturm_count(V, grid, basis.lambda(j) - gap) == j - 1);
    CHECK(sturm_count(V, grid, basis.lambda(j) + gap) == j);
  }
}

TEST_CASE("second-order convergence under grid halving") {
  Potential V(PotentialSpec::monomial(2.0));
  std::vector<std::vector<double>> lam;
  for (int n : {801, 1601, 3201}) lam.push_back(solve_spectrum(V, Grid{8.0, n}, 6).lambdas);
  for (int j = 0; j < 6; ++j) {
    const double ratio = (lam[0][j] - lam[1][j]) / (lam[1][j] - lam[2][j]);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("Weyl exponents") {
  Potential quartic(PotentialSpec::monomial(2.0));
  const auto b2 = solve_spectrum(quartic, auto_grid(quartic, 60), 60);
  CHECK(weyl_fit(b2, 20, 60).exponent == doctest::Approx(4.0 / 3.0).epsilon(0.03));

  Potential cubic(PotentialSpec::monomial(1.5));
  const auto b15 = solve_spectrum(cubic, auto_grid(cubic, 60), 60);
  CHECK(weyl_fit(b15, 20, 60).exponent == doctest::Approx(1.2).epsilon(0.033));

  CHECK(weyl_fit(std::vector<double>(30, 5.0), 1, 30).exponent == doctest::Approx(0.0));
  CHECK_THROWS_AS(weyl_fit(std::vector<double>(30, 5.0), 1, 5), Error);
}

TEST_CASE("Weyl estimate tracks computed eigenvalues") {
  Potential V(PotentialSpec::monomial(2.0));
  const auto basis = solve_spectrum(V, Grid{8.0, 4001}, 30);
  for (int j : {10, 20, 30}) CHECK(weyl_estimate(V.spec(), j) == doctest::Approx(basis.lambda(j)).epsilon(0.01));
  const Grid g = auto_grid(V, 60);
  CHECK(V(0.9 * g.L) >= 4.0 * weyl_estimate(V.spec(), 60));
  CHECK(g.n_pts % 2 == 1);
}

TEST_CASE("domain errors") {
  Potential V(PotentialSpec::monomial(2.0));
  try {
    solve_spectrum(V, Grid{2.0, 401}, 10);
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Truncation);
  }
  try {
    solve_spectrum(V, Grid{3.0, 601}, 5);
    FAIL("expected domain-too-small");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainTooSmall);
    CHECK(std::string(e.what()).find("suggested L=") != std::string::npos);
  }
  CHECK_THROWS_AS(solve_spectrum(V, Grid{8.0, 400}, 2), Error);
}

TEST_CASE("csv export") {
  Potential V(PotentialSpec::monomial(2.0));
  const auto basis = solve_spectrum(V, Grid{6.0, 601}, 2);
  std::ostringstream a, b;
  write_eigenvalues_csv(a, basis);
  write_eigenfunctions_csv(b, basis);
  CHECK(a.str().rfind("j,lambda\n1,", 0) == 0);
  CHECK(b.str().rfind("x,h1,h2\n", 0) == 0);
}
