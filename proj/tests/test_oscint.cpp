#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kamred/error.hpp"
#include "kamred/oscint.hpp"

using namespace kamred;

namespace {

const SpectralBasis& quartic_basis() {
  static const SpectralBasis basis = [] {
    Potential V(PotentialSpec::monomial(2.0));
    return solve_spectrum(V, auto_grid(V, 60), 60);
  }();
  return basis;
}

}  // namespace

TEST_CASE("orthonormality through the k = 0, f = 1 element") {
  const auto& b = quartic_basis();
  const auto one = WeightSpec::bracket(0.0);
  CHECK(std::abs(matrix_element(one, 0.0, 3, 3, b) - 1.0) < 1e-10);
  CHECK(std::abs(matrix_element(one, 0.0, 3, 8, b)) < 1e-8);
  CHECK(std::abs(matrix_element(one, 0.0, 17, 18, b)) < 1e-8);
}

TEST_CASE("element at n = 30 against a double-resolution oracle") {
  Potential V(PotentialSpec::monomial(2.0));
  const auto r = matrix_element_refined(V, WeightSpec::bracket(1.0), 1.0, 30, 30, Grid{8.0, 8001});
  CHECK(r.change < 1e-7);
  // The basis-grid element agrees to the O(h^2) level of the eigenfunctions.
  const cplx basis_value = matrix_element(WeightSpec::bracket(1.0), 1.0, 30, 30, quartic_basis());
  CHECK(std::abs(basis_value - r.fine) < 1e-2 * std::abs(r.fine));
}

TEST_CASE("conjugate symmetry") {
  const auto& b = quartic_basis();
  const auto f = WeightSpec::bracket(1.0);
  for (double k : {0.5, 1.0, 3.0}) {
    for (auto [m, n] : {std::pair{5, 9}, std::pair{20, 21}, std::pair{40, 35}}) {
      CHECK(std::abs(matrix_element(f, k, m, n, b) - std::conj(matrix_element(f, -k, n, m, b))) < 1e-10);
    }
  }
}

TEST_CASE("resolution gate") {
  const auto& b = quartic_basis();
  try {
    matrix_element(WeightSpec::bracket(1.0), 1e3, 1, 1, b);
    FAIL("expected under-resolved");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnderResolved);
    CHECK(std::string(e.what()).find("need h <=") != std::string::npos);
  }
}

TEST_CASE("decay exponent formula") {
  CHECK(decay_exponent(1.0, 2.0) == doctest::Approx(5.0 / 56.0).epsilon(1e-14));
  CHECK(decay_exponent(0.0, 2.0) == doctest::Approx(-1.0 / 40.0).epsilon(1e-14));
  CHECK(decay_exponent(2.0, 2.0) == doctest::Approx(5.0 / 24.0).epsilon(1e-14));
  CHECK(decay_bound(1.0, 2.0, 0.5, 10.0, 10.0) == doctest::Approx(2.0 * std::pow(100.0, 5.0 / 56.0)));
  CHECK(decay_bound(1.0, 2.0, 2.0, 10.0, 10.0) == doctest::Approx(2.0 * std::pow(100.0, 5.0 / 56.0)));
  CHECK_THROWS_AS(decay_bound(1.0, 2.0, 0.0, 10.0, 10.0), Error);
  CHECK(diagonal_bound(1.0, 2.0, 16.0, 16.0) == doctest::Approx(std::pow(256.0, 1.0 / 8.0)));
}

TEST_CASE("diagonal exponent fits stay below the bounds") {
  const auto& b = quartic_basis();
  const auto f1 = exponent_fit(WeightSpec::bracket(1.0), 1.0, b, 20, 60);
  CHECK(f1.E_fit <= 5.0 / 56.0 + 0.05);
  const auto f0 = exponent_fit(WeightSpec::bracket(0.0), 1.0, b, 20, 60);
  CHECK(f0.E_fit <= 0.0);
  const auto fd = exponent_fit(WeightSpec::bracket(1.0), 0.0, b, 20, 60);
  CHECK(fd.E_fit <= 1.0 / 8.0 + 0.05);
  MESSAGE("E_fit: mu=1,k=1 " << f1.E_fit << "; mu=0,k=1 " << f0.E_fit << "; mu=1,k=0 " << fd.E_fit);
  CHECK_THROWS_AS(exponent_fit(WeightSpec::bracket(1.0), 1.0, b, 20, 25), Error);
}

TEST_CASE("degenerate fit") {
  const auto& b = quartic_basis();
  const auto zero = WeightSpec::custom(0.0, [](double) { return 0.0; }, [](double) { return 0.0; });
  try {
    exponent_fit(zero, 1.0, b, 20, 40);
    FAIL("expected degenerate-fit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFit);
  }
}

TEST_CASE("one constant bounds every scanned element") {
  const auto& b = quartic_basis();
  for (double k : {0.5, 1.0, 2.0}) {
    const auto rows = oscint_scan(WeightSpec::bracket(1.0), k, 2.0, b, 20, 60, {0, 1, 2, 5});
    const double C = fitted_constant(rows);
    CHECK(C > 0.0);
    CHECK(C < 10.0);
    for (const auto& r : rows) CHECK(std::abs(r.value) <= C * r.bound * (1 + 1e-12));
  }
  std::ostringstream os;
  write_scan_csv(os, oscint_scan(WeightSpec::bracket(1.0), 1.0, 2.0, b, 20, 22, {0}));
  CHECK(os.str().rfind("m,n,k,re,im,abs,bound\n20,20,1,", 0) == 0);
}

TEST_CASE("negative mu stays bounded") {
  const auto& b = quartic_basis();
  double worst = 0.0;
  for (int n = 1; n <= 60; ++n) worst = std::max(worst, std::abs(matrix_element(WeightSpec::bracket(-0.5), 1.0, n, n, b)));
  CHECK(worst <= 1.0);
}

TEST_CASE("custom weight and growth constant") {
  const auto& b = quartic_basis();
  const auto f = WeightSpec::custom(1.0, [](double x) { return std::abs(x) + 1.0; },
                                    [](double x) { return x < 0 ? -1.0 : 1.0; });
  CHECK(f.fit_c2(b.grid, 1.0) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(WeightSpec::bracket(1.0).fit_c2(b.grid, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("model oscillatory integral obeys the first-derivative bound") {
  // int_0^1 e^{i lambda x} dx with phase derivative 1: |I| <= c1 / lambda.
  for (double lam : {10.0, 100.0, 1000.0}) {
    const int n = 200000;
    cplx sum{0.0, 0.0};
    for (int i = 0; i <= n; ++i) {
      const double x = static_cast<double>(i) / n;
      sum += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(cplx(0.0, lam * x));
    }
    sum /= static_cast<double>(n);
    CHECK(std::abs(sum) * lam <= 2.01);
  }
}
