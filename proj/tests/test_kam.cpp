#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kamred/error.hpp"
#include "kamred/kam.hpp"
#include "kamred/potential.hpp"

using namespace kamred;

namespace {

const double kGolden = 0.5 * (std::sqrt(5.0) - 1.0);

const SpectralBasis& quartic_basis() {
  static const SpectralBasis basis = [] {
    const Potential V(PotentialSpec::monomial(2));
    return solve_spectrum(V, auto_grid(V, 40), 40);
  }();
  return basis;
}

QPMatrix random_hermitian(std::mt19937_64& rng, int N, int K, double scale) {
  std::normal_distribution<double> g;
  QPMatrix P(1, K, N);
  const auto& lat = P.lattice();
  for (int k = 0; k <= lat.zero(); ++k) {
    if (lat.l1(k) > 1) continue;
    CMat G(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) G(i, j) = scale * cplx(g(rng), g(rng));
    if (k == lat.zero()) {
      P.block(k) = 0.5 * (G + G.adjoint());
    } else {
      P.block(k) = G;
      P.block(lat.negate(k)) = G.adjoint();
    }
  }
  return P;
}

}  // namespace

TEST_CASE("exponents and schedule") {
  CHECK(class_beta(2.0, 1.0) == doctest::Approx(5.0 / 42.0).epsilon(1e-14));
  CHECK(2.0 * class_beta(2.0, 1.0) == doctest::Approx(5.0 / 21.0).epsilon(1e-14));
  CHECK(class_beta(2.0, 0.0) == 0.0);
  CHECK(spectral_iota(2.0) == doctest::Approx(4.0 / 3.0));
  const double theta = (5.0 / 21.0) / (1.0 / 3.0);
  CHECK(a3_exponent(1, 8.0, 5.0 / 42.0, 4.0 / 3.0) == doctest::Approx(9.0 + theta * 11.0 / (1.0 - theta)));
  CHECK_THROWS_AS(a3_exponent(1, 8.0, 0.2, 1.2), Error);

  IterationSchedule sc;
  sc.eps0 = 1e-3;
  sc.s0 = 0.5;
  sc.l_max = 6;
  const auto lv = schedule_levels(sc, 1);
  REQUIRE(lv.size() == 7);
  CHECK(lv[1].eps == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lv[2].eps == doctest::Approx(std::pow(10.0, -16.0 / 3.0)).epsilon(1e-12));
  CHECK(lv[2].eps == doctest::Approx(2.15e-6).epsilon(1e-3));
  CHECK(lv.back().s == doctest::Approx(0.25).epsilon(1e-12));
  for (size_t l = 1; l < lv.size(); ++l) {
    CHECK(lv[l].s < lv[l - 1].s);
    CHECK(lv[l].K == static_cast<int>(l) * sc.K_base);
  }
  sc.s0 = 1.0;
  CHECK_THROWS_AS(schedule_levels(sc, 1), Error);
}

TEST_CASE("assembling the perturbation") {
  const auto& basis = quartic_basis();
  auto W = default_perturbation(1.0, 0.0);
  CHECK(assemble_problem(basis, 2.0, W, 30, 1, 4).P.is_zero());

  W.eps = 1e-3;
  const Problem pb = assemble_problem(basis, 2.0, W, 30, 1, 4);
  CHECK(pb.beta == doctest::Approx(5.0 / 42.0));
  CHECK(std::isfinite(pb.norm_beta));
  CHECK(pb.norm_beta > 0.0);
  CHECK(pb.norm_beta < 1e-2);
  CHECK(pb.b3_surrogate > 0.0);
  CHECK(pb.P.hermitian_defect() < 1e-18);
  // odd W couples only opposite parities
  CHECK(std::abs(pb.P[{1}](0, 0)) < 1e-15);
  CHECK(std::abs(pb.P[{1}](0, 1)) > 1e-5);
  CHECK(pb.P[{0}].cwiseAbs().maxCoeff() == 0.0);

  auto even = W;
  even.terms[0].x_sin = false;
  try {
    assemble_problem(basis, 2.0, even, 10, 1, 4);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::A3Violation);
  }
  CHECK_THROWS_AS(assemble_problem(basis, 2.0, W, 41, 1, 4), Error);
}

TEST_CASE("one step: trivial cases") {
  KamState st;
  st.lambdas = {1.0, 2.5, 4.2};
  st.mus.assign(3, TorusFunction::zero(1, 3));
  st.P = QPMatrix(1, 3, 3);
  st.s = 0.5;
  st.omega = {kGolden};
  const auto same = kam_step(st, 0.01, {});
  CHECK(same.level == 1);
  CHECK(same.lambdas == st.lambdas);
  CHECK(same.P.is_zero());

  st.P[{0}](1, 1) = 0.3;
  st.P[{0}](2, 2) = -0.1;
  const auto d = kam_step(st, 0.01, {});
  CHECK(d.lambdas[1] == doctest::Approx(2.8));
  CHECK(d.lambdas[2] == doctest::Approx(4.1));
  CHECK(d.P.is_zero());
  for (const auto& mu : d.mus) CHECK(mu.strip_norm(0.0) == 0.0);
}

TEST_CASE("one step: quadratic contraction and the direct formula") {
  std::mt19937_64 rng(17);
  const int N = 20;
  KamState st;
  for (int j = 1; j <= N; ++j) st.lambdas.push_back(quartic_basis().lambda(j));
  st.mus.assign(N, TorusFunction::zero(1, 8));
  st.P = random_hermitian(rng, N, 8, 1.0);
  st.P *= cplx(1e-3 / strip_norm(st.P, 5.0 / 42.0, 0.0), 0.0);
  st.s = 0.0;
  st.omega = {kGolden};
  StepOptions opts;
  opts.beta = 5.0 / 42.0;
  StepReport rep;
  const auto next = kam_step(st, 0.0, opts, &rep);
  CHECK(rep.norm_before == doctest::Approx(1e-3));
  CHECK(rep.norm_after < 1e-3 * rep.norm_before);
  CHECK(rep.norm_after / std::pow(rep.norm_before, 4.0 / 3.0) <= 1.0);
  MESSAGE("c = " << rep.contraction << ", lie terms " << rep.lie_terms);
  CHECK(rep.hermitian_defect < 1e-9);
  CHECK(rep.drift_ok);
  for (const auto& mu : next.mus) CHECK(std::abs(mu.mean()) == 0.0);
  CHECK(direct_step_discrepancy(st, next) < 1e-11);
}

TEST_CASE("iteration on the quartic oscillator") {
  const auto& basis = quartic_basis();
  const int N = 16;
  const Problem pb = assemble_problem(basis, 2.0, default_perturbation(1.0, 1e-3), N, 1, 8);
  IterationSchedule sc;
  sc.stop_tol = 1e-12;
  const auto res = run_iteration(pb, {kGolden}, sc);
  CHECK(res.stop_reason == "converged");
  REQUIRE(res.levels.size() >= 3);
  for (size_t l = 1; l < res.levels.size(); ++l) {
    CHECK(res.levels[l].norm_P < res.levels[l - 1].norm_P);
    CHECK(res.levels[l].hermitian_defect < 1e-9);
    CHECK(res.levels[l].drift_ok);
  }
  const double r1 = std::log(res.levels[1].norm_P) / std::log(res.levels[0].norm_P);
  CHECK(r1 >= 1.25);
  CHECK(res.unitarity < 1e-8);
  for (const auto& mu : res.mus_inf) CHECK(std::abs(mu.mean()) == 0.0);
  const auto phis = torus_samples(1, 16);
  const double resid = reducibility_residual(res.U, res.lambdas_inf, res.mus_inf, pb, {kGolden}, phis);
  CHECK(resid < 1e-8);

  // keeping only the first conjugation leaves P^1 behind
  const QPMatrix U1 = compose_exponentials({res.final.history[0]}, 1, 8, N);
  KamState st = initial_state(pb, {kGolden}, sc.s0);
  StepOptions opts;
  const KamState one = kam_step(st, 0.0, opts);
  const double r1res = reducibility_residual(U1, one.lambdas, one.mus, pb, {kGolden}, phis);
  const double p1 = strip_norm(one.P, 0.0, 0.0);
  CHECK(r1res > 0.1 * p1);
  CHECK(r1res < 10.0 * p1);

  const auto zero = run_iteration(assemble_problem(basis, 2.0, default_perturbation(1.0, 0.0), N, 1, 8), {kGolden}, sc);
  CHECK(zero.stop_reason == "zero-perturbation");
  CHECK(zero.U_deviation == 0.0);
  CHECK(zero.lambdas_inf == pb.lambdas);
}

TEST_CASE("first Melnikov screen") {
  const auto& basis = quartic_basis();
  const Problem pb = assemble_problem(basis, 2.0, default_perturbation(1.0, 1e-3), 6, 1, 4);
  IterationSchedule sc;
  sc.gamma0 = 0.1;
  CHECK_THROWS_AS(run_iteration(pb, {1e-4}, sc), ResonanceError);
}

TEST_CASE("resonance filter") {
  std::vector<double> lam;
  for (int j = 1; j <= 20; ++j) lam.push_back(quartic_basis().lambda(j));
  const auto grid = omega_grid(1, 100001);
  CHECK(resonance_filter(lam, grid, 0.0, 8.0, 30, 4.0 / 3.0).excluded_fraction == 0.0);
  for (double g : {0.1, 0.05, 0.02}) {
    const double a = resonance_filter(lam, grid, g, 8.0, 30, 4.0 / 3.0).excluded_fraction;
    const double b = resonance_filter(lam, grid, g / 2, 8.0, 30, 4.0 / 3.0).excluded_fraction;
    CHECK(a / b >= 1.4);
    CHECK(a / b <= 2.6);
  }
  CHECK_THROWS_AS(resonance_filter(lam, grid, 0.1, 6.0, 30, 4.0 / 3.0), Error);
  try {
    resonance_filter(lam, grid, 2.0, 8.0, 30, 4.0 / 3.0);
    FAIL("expected over-exclusion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverExclusion);
  }
}

TEST_CASE("small instance matches the interval oracle") {
  const std::vector<double> lam = {1.0, 2.0};
  const double gamma = 0.05, tau = 3.0, iota = 3.0;
  const int K = 3;
  // Oracle: list every exclusion interval, sort, merge.
  std::vector<std::pair<double, double>> iv;
  for (int k = -K; k <= K; ++k) {
    if (k == 0) continue;
    const double a = std::abs(k);
    iv.push_back({-gamma / std::pow(a, tau) / a, gamma / std::pow(a, tau) / a});
    const double half = gamma * 7.0 / (1.0 + std::pow(a, tau)) / a;
    iv.push_back({1.0 / k - half, 1.0 / k + half});
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (auto I : iv) {
    I.first = std::max(I.first, 0.0);
    I.second = std::min(I.second, 1.0);
    if (I.first >= I.second) continue;
    if (!merged.empty() && I.first < merged.back().second) {
      merged.back().second = std::max(merged.back().second, I.second);
    } else {
      merged.push_back(I);
    }
  }
  const auto got = excluded_intervals(lam, gamma, tau, K, iota);
  REQUIRE(got.size() == merged.size());
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].lo == merged[i].first);
    CHECK(got[i].hi == merged[i].second);
  }
  const auto grid = omega_grid(1, 2001);
  const auto f = resonance_filter(lam, grid, gamma, tau, K, iota);
  for (size_t p = 0; p < grid.size(); ++p) {
    const double w = grid[p][0];
    bool in = false;
    for (int k = -K; k <= K; ++k) {
      if (k == 0) continue;
      const double a = std::abs(k);
      in = in || std::abs(k * w) < gamma / std::pow(a, tau);
      in = in || std::abs(-1.0 + k * w) < gamma * 7.0 / (1.0 + std::pow(a, tau));
    }
    CHECK(f.excluded[p] == in);
  }
  double meas = 0.0;
  for (const auto& I : merged) meas += I.second - I.first;
  CHECK(f.excluded_measure == doctest::Approx(meas).epsilon(1e-14));

  // two frequencies: brute-force path
  const auto g2 = omega_grid(2, 41);
  CHECK(resonance_filter(lam, g2, 0.0, 3.5, K, iota).excluded_fraction == 0.0);
  const double f1 = resonance_filter(lam, g2, 0.02, 3.5, K, iota).excluded_fraction;
  const double f2 = resonance_filter(lam, g2, 0.04, 3.5, K, iota).excluded_fraction;
  CHECK(f1 > 0.0);
  CHECK(f2 >= f1);
}
