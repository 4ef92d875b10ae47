#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "kamred/error.hpp"
#include "kamred/matclass.hpp"

using namespace kamred;

TEST_CASE("entrywise norms") {
  CHECK(norm_beta(CMat::Identity(5, 5), 0.7) == doctest::Approx(1.0));
  CHECK(norm_beta(CMat::Zero(4, 4), 0.3) == 0.0);
  CMat A = CMat::Zero(4, 4);
  A(1, 2) = 6.0;  // A_2^3
  CHECK(norm_beta(A, 0.5) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-14));

  CHECK(norm_beta_plus(CMat::Identity(8, 8), 0.0, 4.0 / 3.0) == doctest::Approx(4.0).epsilon(1e-14));
  CMat B = CMat::Zero(3, 3);
  B(0, 1) = 1.0;
  CHECK(norm_beta_plus(B, 0.0, 4.0 / 3.0) == doctest::Approx(2.0 * (1.0 + std::cbrt(2.0))).epsilon(1e-14));
  CHECK(norm_beta_plus(CMat::Zero(3, 3), 0.1, 1.5) == 0.0);
}

TEST_CASE("norms grow with nested truncations") {
  auto pattern = [](int i, int j) { return std::sin(0.7 * i + 1.3 * j) * std::pow(i * j, 0.1) / (1.0 + std::abs(i - j)); };
  double prev_b = 0.0, prev_p = 0.0;
  for (int N : {4, 8, 16, 32}) {
    CMat A(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) A(i, j) = pattern(i + 1, j + 1);
    const double b = norm_beta(A, 0.1), p = norm_beta_plus(A, 0.1, 4.0 / 3.0);
    CHECK(b >= prev_b);
    CHECK(p >= prev_p);
    prev_b = b;
    prev_p = p;
  }
}

TEST_CASE("weighted operator norm") {
  CMat D = CMat::Zero(6, 6);
  for (int j = 0; j < 6; ++j) D(j, j) = 0.5 * (j % 3) - 0.9;
  CHECK(weighted_op_norm(D, 0.8, 0.8) == doctest::Approx(0.9).epsilon(1e-8));

  CMat E = CMat::Zero(6, 6);
  E(3, 1) = 1.0;  // i = 4, j = 2
  const double s = 0.6, t = -0.4;
  CHECK(weighted_op_norm(E, s, t) == doctest::Approx(std::pow(4.0, t / 2) * std::pow(2.0, -s / 2)).epsilon(1e-10));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  CMat R(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) R(i, j) = {g(rng), g(rng)};
  CMat W = R;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) W(i, j) *= std::pow(i + 1.0, 0.5 * 0.3) * std::pow(j + 1.0, -0.5 * 0.3);
  Eigen::JacobiSVD<CMat> svd(W);
  CHECK(weighted_op_norm(R, 0.3, 0.3) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-8));

  CHECK(weighted_op_norm(CMat::Zero(3, 3), 0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(weighted_op_norm(R, 0.3, 0.3, 1), Error);
}

TEST_CASE("lattice indexing") {
  FourierLattice lat(2, 3);
  CHECK(lat.size() == 49);
  CHECK(lat.mode(lat.zero()) == Mode{0, 0});
  for (int k = 0; k < lat.size(); ++k) {
    CHECK(lat.index(lat.mode(k)) == k);
    Mode neg = lat.mode(k);
    for (auto& c : neg) c = -c;
    CHECK(lat.index(neg) == lat.negate(k));
  }
  CHECK(lat.index({4, 0}) == -1);
  CHECK(lat.sum(lat.index({2, -1}), lat.index({1, 1})) == lat.index({3, 0}));
  CHECK(lat.sum(lat.index({2, -1}), lat.index({2, 1})) == -1);
}

TEST_CASE("strip norm") {
  QPMatrix Q(1, 2, 3);
  Q[{1}](0, 0) = 1.0;
  Q[{-1}](0, 0) = 1.0;
  CHECK(strip_norm(Q, 0.2, 0.5) == doctest::Approx(2.0 * std::exp(0.5)).epsilon(1e-14));
  CMat B = CMat::Random(3, 3);
  const QPMatrix C = QPMatrix::constant(1, 2, B);
  CHECK(strip_norm(C, 0.2, 3.0) == doctest::Approx(norm_beta(B, 0.2)));
  CHECK(strip_norm(QPMatrix(2, 1, 3), 0.2, 1.0) == 0.0);
  CHECK_THROWS_AS(strip_norm(Q, 0.2, -0.1), Error);
}

namespace {

QPMatrix random_qp(std::mt19937_64& rng, int n, int K, int N, double decay, bool anti_hermitian) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  QPMatrix Q(n, K, N);
  const auto& lat = Q.lattice();
  for (int k = 0; k <= lat.zero(); ++k) {
    CMat G(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) G(i, j) = cplx(u(rng), u(rng)) * std::exp(-decay * lat.l1(k));
    const double sgn = anti_hermitian ? -1.0 : 1.0;
    if (k == lat.zero()) {
      Q.block(k) = 0.5 * (G + sgn * G.adjoint());
    } else {
      Q.block(k) = G;
      Q.block(lat.negate(k)) = sgn * G.adjoint();
    }
  }
  return Q;
}

}  // namespace

TEST_CASE("product matches pointwise multiplication when nothing is truncated") {
  std::mt19937_64 rng(3);
  QPMatrix A(1, 4, 4), B(1, 4, 4);
  const auto full = random_qp(rng, 1, 2, 4, 0.5, false);
  const auto other = random_qp(rng, 1, 2, 4, 0.5, true);
  for (int k = 0; k < full.lattice().size(); ++k) {
    A[full.lattice().mode(k)] = full.block(k);
    B[other.lattice().mode(k)] = other.block(k);
  }
  double tail = -1.0;
  const QPMatrix C = qp_product(A, B, &tail);
  CHECK(tail == 0.0);
  for (const auto& phi : torus_samples(1, 7)) {
    CHECK((C.eval(phi) - A.eval(phi) * B.eval(phi)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(A.hermitian_defect() < 1e-15);
  CHECK(A.adjoint().hermitian_defect() < 1e-15);
  CHECK_THROWS_AS(qp_product(A, QPMatrix(1, 4, 5)), Error);
  CHECK_THROWS_AS(A += QPMatrix(1, 3, 4), Error);
}

TEST_CASE("strip norm is submultiplicative up to the dropped tail") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto A = random_qp(rng, 2, 2, 5, 0.3, false);
    const auto B = random_qp(rng, 2, 2, 5, 0.3, true);
    double tail = 0.0;
    const auto C = qp_product(A, B, &tail);
    for (double s : {0.0, 0.4}) {
      CHECK(strip_norm(C, 0.0, s) <= strip_norm(A, 0.0, s) * strip_norm(B, 0.0, s) * (1.0 + 1e-12));
    }
    CHECK(tail > 0.0);
  }
}

TEST_CASE("exponential") {
  const QPMatrix Z(1, 2, 4);
  CHECK((qp_exp(Z).block(Z.lattice().zero()) - CMat::Identity(4, 4)).norm() == 0.0);

  std::mt19937_64 rng(5);
  CMat G = CMat::Random(5, 5) * 3.0;
  const CMat Bc = G - G.adjoint();
  const QPMatrix E = qp_exp(QPMatrix::constant(1, 2, Bc));
  const CMat dense = Bc.exp();
  CHECK((E.block(E.lattice().zero()) - dense).cwiseAbs().maxCoeff() < 1e-10);

  const auto phis = torus_samples(1, 16);
  for (int t = 0; t < 5; ++t) {
    // Support |l| <= 3 on a padded lattice so e^B is not truncated.
    const auto small = random_qp(rng, 1, 3, 6, 0.5, true);
    QPMatrix B(1, 24, 6);
    for (int k = 0; k < small.lattice().size(); ++k) B[small.lattice().mode(k)] = 0.3 * small.block(k);
    const auto U = qp_exp(B);
    CHECK(unitarity_defect(U, phis) < 1e-10);
    auto mB = B;
    mB *= cplx(-1.0, 0.0);
    const auto P = qp_product(U, qp_exp(mB));
    CHECK((P - QPMatrix::identity(1, 24, 6)).max_abs() < 1e-9);
  }
}

TEST_CASE("time derivative and diagonal") {
  QPMatrix Q(2, 1, 2);
  Q[{1, -1}](0, 1) = 2.0;
  Q[{0, 0}](1, 1) = 3.0;
  const auto D = Q.time_derivative({0.5, 2.0});
  CHECK(D[(Mode{1, -1})](0, 1) == cplx(0.0, -3.0));
  CHECK(D[(Mode{0, 0})](1, 1) == cplx(0.0, 0.0));
  const auto diag = Q.diagonal();
  CHECK(diag[1].mean() == cplx(3.0, 0.0));
  CHECK(diag[0].strip_norm(1.0) == 0.0);
  CHECK_THROWS_AS(Q.time_derivative({1.0}), Error);
}

TEST_CASE("power difference inequality") {
  const double k = 4.0, j = 1.0, iota = 4.0 / 3.0;
  const double lhs = std::abs(std::pow(k, iota) - std::pow(j, iota));
  const double rhs = 0.5 * 3.0 * (std::pow(k, iota - 1) + 1.0);
  CHECK(lhs == doctest::Approx(5.3496).epsilon(1e-4));
  CHECK(rhs == doctest::Approx(3.881).epsilon(1e-3));
  for (double io : {1.1, 4.0 / 3.0, 1.5, 2.0, 3.0}) CHECK(power_difference_margin(io) >= 1.0);
}

TEST_CASE("random algebra bounds") {
  const auto r = verify_algebra(200, 32, 5.0 / 42.0, 4.0 / 3.0, 2024);
  CHECK(r.power_difference_ok);
  CHECK(r.C_product_beta <= 10.0);
  CHECK(r.C_product_plus <= 10.0);
  CHECK(r.C_op <= 10.0);
  CHECK(r.C_exp <= 10.0);
  CHECK(r.unitarity < 1e-9);
  CHECK(r.all_ok);
  MESSAGE("C_beta=" << r.C_product_beta << " C_plus=" << r.C_product_plus << " C_op=" << r.C_op
                    << " C_exp=" << r.C_exp);
  CHECK_THROWS_AS(verify_algebra(10, 8, 0.2, 1.2, 1), Error);
}
