#include "kamred/matclass.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kamred/error.hpp"

namespace kamred {

namespace {

double plus_weight(int i, int j, double beta, double iota) {
  // i, j are 1-based here.
  return std::pow(static_cast<double>(i) * j, -beta) * (1.0 + std::abs(i - j)) *
         (std::pow(i, iota - 1.0) + std::pow(j, iota - 1.0));
}

double frobenius_sum(const QPMatrix& Q) {
  double s = 0.0;
  for (int k = 0; k < Q.lattice().size(); ++k) s += Q.block(k).norm();
  return s;
}

}  // namespace

double norm_beta(const CMat& A, double beta) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double a = std::abs(A(i, j));
      if (a == 0.0) continue;
      best = std::max(best, a * std::pow(static_cast<double>((i + 1) * (j + 1)), -beta));
    }
  }
  return best;
}

double norm_beta_plus(const CMat& A, double beta, double iota) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double a = std::abs(A(i, j));
      if (a == 0.0) continue;
      best = std::max(best, a * plus_weight(static_cast<int>(i + 1), static_cast<int>(j + 1), beta, iota));
    }
  }
  return best;
}

double weighted_op_norm(const CMat& A, double source_s, double target_t, int max_iter) {
  const Eigen::Index n = A.cols();
  CMat M = A;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      M(i, j) *= std::pow(static_cast<double>(i + 1), 0.5 * target_t) * std::pow(static_cast<double>(j + 1), -0.5 * source_s);
    }
  }
  if (M.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Block power iteration on M^*M with a Rayleigh-Ritz step, so clustered top
  // singular values do not stall convergence.
  const Eigen::Index b = std::min<Eigen::Index>(n, 6);
  CMat V(n, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < n; ++i) V(i, j) = cplx(1.0 + 0.37 * std::sin(1.3 * i + 0.7 * j + 0.2), 0.11 * j * std::cos(0.9 * i));
  V = Eigen::HouseholderQR<CMat>(V).householderQ() * CMat::Identity(n, b);
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    const CMat W = M.adjoint() * (M * V);
    const CMat T = V.adjoint() * W;
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (T + T.adjoint()));
    const double top = es.eigenvalues()(b - 1);
    if (top <= 0.0) return 0.0;
    if (it > 0 && std::abs(top - prev) <= 1e-14 * top) return std::sqrt(top);
    prev = top;
    V = Eigen::HouseholderQR<CMat>(W * es.eigenvectors()).householderQ() * CMat::Identity(n, b);
  }
  throw Error(ErrorCode::IterationLimit, "weighted_op_norm: power iteration did not converge in " +
                                             std::to_string(max_iter) + " steps");
}

FourierLattice::FourierLattice(int n_freq, int K) : n_(n_freq), K_(K) {
  if (n_freq < 1 || K < 0) throw Error(ErrorCode::Validation, "Fourier lattice needs n >= 1 and K >= 0");
  size_ = 1;
  for (int i = 0; i < n_; ++i) size_ *= 2 * K_ + 1;
  modes_.resize(size_);
  for (int idx = 0; idx < size_; ++idx) {
    Mode l(n_);
    int r = idx;
    for (int i = 0; i < n_; ++i) {
      l[i] = r % (2 * K_ + 1) - K_;
      r /= 2 * K_ + 1;
    }
    modes_[idx] = std::move(l);
  }
}

int FourierLattice::index(const Mode& l) const {
  if (static_cast<int>(l.size()) != n_) return -1;
  int idx = 0;
  int base = 1;
  for (int i = 0; i < n_; ++i) {
    if (std::abs(l[i]) > K_) return -1;
    idx += (l[i] + K_) * base;
    base *= 2 * K_ + 1;
  }
  return idx;
}

int FourierLattice::sum(int a, int b) const {
  int idx = 0;
  int base = 1;
  const Mode& la = modes_[a];
  const Mode& lb = modes_[b];
  for (int i = 0; i < n_; ++i) {
    const int c = la[i] + lb[i];
    if (std::abs(c) > K_) return -1;
    idx += (c + K_) * base;
    base *= 2 * K_ + 1;
  }
  return idx;
}

int FourierLattice::l1(int idx) const {
  int s = 0;
  for (int c : modes_[idx]) s += std::abs(c);
  return s;
}

double FourierLattice::dot(int idx, const std::vector<double>& v) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += modes_[idx][i] * v.at(i);
  return s;
}

TorusFunction TorusFunction::zero(int n_freq, int K) {
  TorusFunction f;
  f.lattice = FourierLattice(n_freq, K);
  f.coeffs.assign(f.lattice.size(), cplx(0.0, 0.0));
  return f;
}

cplx TorusFunction::eval(const std::vector<double>& phi) const {
  cplx s{0.0, 0.0};
  for (int k = 0; k < lattice.size(); ++k) {
    if (coeffs[k] != cplx(0.0, 0.0)) s += coeffs[k] * std::exp(cplx(0.0, lattice.dot(k, phi)));
  }
  return s;
}

double TorusFunction::reality_defect() const {
  double d = 0.0;
  for (int k = 0; k < lattice.size(); ++k) d = std::max(d, std::abs(coeffs[lattice.negate(k)] - std::conj(coeffs[k])));
  return d;
}

double TorusFunction::strip_norm(double s) const {
  double n = 0.0;
  for (int k = 0; k < lattice.size(); ++k) n += std::exp(lattice.l1(k) * s) * std::abs(coeffs[k]);
  return n;
}

QPMatrix::QPMatrix(int n_freq, int K, int N) : lattice_(n_freq, K), N_(N) {
  if (N < 1) throw Error(ErrorCode::Validation, "QPMatrix: N must be positive");
  blocks_.assign(lattice_.size(), CMat::Zero(N, N));
}

QPMatrix QPMatrix::identity(int n_freq, int K, int N) {
  QPMatrix Q(n_freq, K, N);
  Q.blocks_[Q.lattice_.zero()] = CMat::Identity(N, N);
  return Q;
}

QPMatrix QPMatrix::constant(int n_freq, int K, const CMat& block) {
  if (block.rows() != block.cols()) throw Error(ErrorCode::DimensionMismatch, "QPMatrix::constant: block not square");
  QPMatrix Q(n_freq, K, static_cast<int>(block.rows()));
  Q.blocks_[Q.lattice_.zero()] = block;
  return Q;
}

CMat& QPMatrix::operator[](const Mode& l) {
  const int idx = lattice_.index(l);
  if (idx < 0) throw Error(ErrorCode::Domain, "QPMatrix: mode outside the cutoff");
  return blocks_[idx];
}

const CMat& QPMatrix::operator[](const Mode& l) const {
  const int idx = lattice_.index(l);
  if (idx < 0) throw Error(ErrorCode::Domain, "QPMatrix: mode outside the cutoff");
  return blocks_[idx];
}

bool QPMatrix::is_zero() const {
  for (int k = 0; k < lattice_.size(); ++k) {
    if (!is_zero_block(k)) return false;
  }
  return true;
}

CMat QPMatrix::eval(const std::vector<double>& phi) const {
  CMat out = CMat::Zero(N_, N_);
  for (int k = 0; k < lattice_.size(); ++k) {
    if (is_zero_block(k)) continue;
    out += std::exp(cplx(0.0, lattice_.dot(k, phi))) * blocks_[k];
  }
  return out;
}

QPMatrix QPMatrix::adjoint() const {
  QPMatrix out(n_freq(), K(), N_);
  for (int k = 0; k < lattice_.size(); ++k) out.blocks_[lattice_.negate(k)] = blocks_[k].adjoint();
  return out;
}

double QPMatrix::hermitian_defect() const {
  double d = 0.0;
  for (int k = 0; k < lattice_.size(); ++k) {
    d = std::max(d, (blocks_[lattice_.negate(k)] - blocks_[k].adjoint()).cwiseAbs().maxCoeff());
  }
  return d;
}

QPMatrix QPMatrix::time_derivative(const std::vector<double>& omega) const {
  if (static_cast<int>(omega.size()) != n_freq()) {
    throw Error(ErrorCode::DimensionMismatch, "time_derivative: omega has the wrong dimension");
  }
  QPMatrix out(n_freq(), K(), N_);
  for (int k = 0; k < lattice_.size(); ++k) out.blocks_[k] = cplx(0.0, lattice_.dot(k, omega)) * blocks_[k];
  return out;
}

std::vector<TorusFunction> QPMatrix::diagonal() const {
  std::vector<TorusFunction> d(N_, TorusFunction::zero(n_freq(), K()));
  for (int k = 0; k < lattice_.size(); ++k) {
    for (int i = 0; i < N_; ++i) d[i].coeffs[k] = blocks_[k](i, i);
  }
  return d;
}

double QPMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

void QPMatrix::check_compatible(const QPMatrix& o) const {
  if (o.N_ != N_ || o.n_freq() != n_freq() || o.K() != K()) {
    throw Error(ErrorCode::DimensionMismatch, "QPMatrix: operands differ in N, n or K");
  }
}

QPMatrix& QPMatrix::operator+=(const QPMatrix& o) {
  check_compatible(o);
  for (int k = 0; k < lattice_.size(); ++k) blocks_[k] += o.blocks_[k];
  return *this;
}

QPMatrix& QPMatrix::operator-=(const QPMatrix& o) {
  check_compatible(o);
  for (int k = 0; k < lattice_.size(); ++k) blocks_[k] -= o.blocks_[k];
  return *this;
}

QPMatrix& QPMatrix::operator*=(cplx a) {
  for (auto& b : blocks_) b *= a;
  return *this;
}

double strip_norm(const QPMatrix& Q, double beta, double s, NormKind kind, double iota) {
  if (s < 0.0) throw Error(ErrorCode::Domain, "strip_norm: s must be nonnegative");
  double n = 0.0;
  for (int k = 0; k < Q.lattice().size(); ++k) {
    if (Q.is_zero_block(k)) continue;
    const double b = kind == NormKind::Beta ? norm_beta(Q.block(k), beta) : norm_beta_plus(Q.block(k), beta, iota);
    n += std::exp(Q.lattice().l1(k) * s) * b;
  }
  return n;
}

QPMatrix qp_product(const QPMatrix& A, const QPMatrix& B, double* tail) {
  if (A.N() != B.N() || A.n_freq() != B.n_freq() || A.K() != B.K()) {
    throw Error(ErrorCode::DimensionMismatch, "qp_product: operands differ in N, n or K");
  }
  const FourierLattice& lat = A.lattice();
  QPMatrix C(A.n_freq(), A.K(), A.N());
  std::vector<int> nzA, nzB;
  for (int k = 0; k < lat.size(); ++k) {
    if (!A.is_zero_block(k)) nzA.push_back(k);
    if (!B.is_zero_block(k)) nzB.push_back(k);
  }
  double dropped = 0.0;
  for (int a : nzA) {
    for (int b : nzB) {
      const int c = lat.sum(a, b);
      if (c < 0) {
        if (tail) dropped += A.block(a).norm() * B.block(b).norm();
        continue;
      }
      C.block(c).noalias() += A.block(a) * B.block(b);
    }
  }
  if (tail) *tail = dropped;
  return C;
}

QPMatrix qp_commutator(const QPMatrix& A, const QPMatrix& B, double* tail) {
  double t1 = 0.0, t2 = 0.0;
  QPMatrix C = qp_product(A, B, tail ? &t1 : nullptr);
  C -= qp_product(B, A, tail ? &t2 : nullptr);
  if (tail) *tail = t1 + t2;
  return C;
}

QPMatrix qp_exp(const QPMatrix& B, double* tail) {
  const double norm = frobenius_sum(B);
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  QPMatrix X = B;
  X *= cplx(std::ldexp(1.0, -squarings), 0.0);

  double dropped = 0.0;
  double t = 0.0;
  QPMatrix E = QPMatrix::identity(B.n_freq(), B.K(), B.N());
  QPMatrix term = E;
  for (int k = 1; k <= 40; ++k) {
    term = qp_product(term, X, tail ? &t : nullptr);
    dropped += t;
    term *= cplx(1.0 / k, 0.0);
    E += term;
    if (frobenius_sum(term) <= 1e-18 * std::max(1.0, frobenius_sum(E))) break;
  }
  for (int s = 0; s < squarings; ++s) {
    E = qp_product(E, E, tail ? &t : nullptr);
    dropped += t;
  }
  if (tail) *tail = dropped;
  return E;
}

std::vector<std::vector<double>> torus_samples(int n_freq, int per_axis) {
  std::vector<std::vector<double>> out;
  int total = 1;
  for (int i = 0; i < n_freq; ++i) total *= per_axis;
  for (int idx = 0; idx < total; ++idx) {
    std::vector<double> phi(n_freq);
    int r = idx;
    for (int i = 0; i < n_freq; ++i) {
      phi[i] = 2.0 * M_PI * (r % per_axis) / per_axis;
      r /= per_axis;
    }
    out.push_back(std::move(phi));
  }
  return out;
}

double unitarity_defect(const QPMatrix& U, const std::vector<std::vector<double>>& phis) {
  double d = 0.0;
  for (const auto& phi : phis) {
    const CMat u = U.eval(phi);
    d = std::max(d, (u.adjoint() * u - CMat::Identity(U.N(), U.N())).cwiseAbs().maxCoeff());
  }
  return d;
}

double power_difference_margin(double iota, int kmax) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kmax; ++k) {
    for (int j = 1; j <= kmax; ++j) {
      if (k == j) continue;
      const double lhs = std::abs(std::pow(k, iota) - std::pow(j, iota));
      const double rhs = 0.5 * std::abs(k - j) * (std::pow(k, iota - 1.0) + std::pow(j, iota - 1.0));
      worst = std::min(worst, lhs / rhs);
    }
  }
  return worst;
}

AlgebraReport verify_algebra(int trials, int N, double beta, double iota, std::uint64_t seed, double cap) {
  if (!(beta >= 0.0 && 2.0 * beta < iota - 1.0)) {
    throw Error(ErrorCode::Validation, "verify_algebra: need 0 <= 2 beta < iota - 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_entry = [&] { return cplx(unit(rng), unit(rng)); };

  // Random members of the two classes: entries bounded by the class weights.
  auto in_beta = [&] {
    CMat A(N, N);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) A(i, j) = random_entry() * std::pow(static_cast<double>((i + 1) * (j + 1)), beta);
    return A;
  };
  auto in_plus = [&] {
    CMat A(N, N);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) A(i, j) = random_entry() / plus_weight(i + 1, j + 1, beta, iota);
    return A;
  };

  AlgebraReport r;
  r.power_difference_ratio = power_difference_margin(iota);
  r.power_difference_ok = r.power_difference_ratio >= 1.0 - 1e-12;

  const double s_max = 2.0 * iota - 2.0 * beta - 1.0;
  for (int t = 0; t < trials; ++t) {
    const CMat A = in_beta();
    const CMat Bp = in_plus();
    const CMat Ap = in_plus();
    r.C_product_beta = std::max(r.C_product_beta, norm_beta(A * Bp, beta) / (norm_beta(A, beta) * norm_beta_plus(Bp, beta, iota)));
    r.C_product_beta = std::max(r.C_product_beta, norm_beta(Bp * A, beta) / (norm_beta(A, beta) * norm_beta_plus(Bp, beta, iota)));
    r.C_product_plus = std::max(r.C_product_plus, norm_beta_plus(Ap * Bp, beta, iota) /
                                                      (norm_beta_plus(Ap, beta, iota) * norm_beta_plus(Bp, beta, iota)));
    for (double frac : {0.0, 0.45, 0.9}) {
      const double s = frac * s_max;
      r.C_op = std::max(r.C_op, weighted_op_norm(Ap, s, s) / norm_beta_plus(Ap, beta, iota));
    }
  }

  // Exponential of small anti-Hermitian-for-real-phi generators.
  // B lives on |l| <= 2; the lattice is padded so e^B is not cut off.
  const int Ne = std::min(N, 12);
  const int K = 24;
  const double s = 0.2;
  const auto phis = torus_samples(1, 16);
  for (int t = 0; t < std::max(1, trials / 10); ++t) {
    QPMatrix B(1, K, Ne);
    const double scale = 0.02 * (1 + t % 5);
    const FourierLattice& lat = B.lattice();
    for (int k = 0; k <= lat.zero(); ++k) {
      if (lat.l1(k) > 2) continue;
      CMat G(Ne, Ne);
      for (int j = 0; j < Ne; ++j)
        for (int i = 0; i < Ne; ++i) G(i, j) = scale * random_entry() * std::exp(-lat.l1(k)) / plus_weight(i + 1, j + 1, beta, iota);
      if (k == lat.zero()) {
        B.block(k) = 0.5 * (G - G.adjoint());
      } else {
        B.block(k) = G;
        B.block(lat.negate(k)) = -G.adjoint();
      }
    }
    const QPMatrix E = qp_exp(B);
    const QPMatrix EmI = E - QPMatrix::identity(1, K, Ne);
    const double nb = strip_norm(B, beta, s, NormKind::BetaPlus, iota);
    const double ne = strip_norm(EmI, beta, s, NormKind::BetaPlus, iota);
    r.C_exp = std::max(r.C_exp, std::log(std::max(ne / nb, 1.0)) / nb);
    r.unitarity = std::max(r.unitarity, unitarity_defect(E, phis));
  }
  r.all_ok = r.power_difference_ok && r.C_product_beta <= cap && r.C_product_plus <= cap && r.C_op <= cap &&
             r.C_exp <= cap && r.unitarity <= 1e-9;
  return r;
}

}  // namespace kamred
