#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kamred/special.hpp"

namespace kamred {

using CMat = Eigen::MatrixXcd;
using Mode = std::vector<int>;

/// sup |A_ij| (ij)^{-beta}, indices from 1.
double norm_beta(const CMat& A, double beta);
/// sup |A_ij| (ij)^{-beta} (1 + |i-j|) (i^{iota-1} + j^{iota-1}).
double norm_beta_plus(const CMat& A, double beta, double iota);

/// Largest singular value of D_t^{1/2} A D_s^{-1/2}, D_s = diag(j^s): the
/// norm of A as a map l^2_s -> l^2_t. Power iteration to 1e-8 relative.
double weighted_op_norm(const CMat& A, double source_s, double target_t, int max_iter = 20000);

/// Modes l in Z^n with |l|_inf <= K, in mixed-radix order.
class FourierLattice {
 public:
  FourierLattice() = default;
  FourierLattice(int n_freq, int K);

  int n_freq() const { return n_; }
  int K() const { return K_; }
  int size() const { return size_; }
  const Mode& mode(int idx) const { return modes_[idx]; }
  /// -1 when l lies outside the box.
  int index(const Mode& l) const;
  int negate(int idx) const { return size_ - 1 - idx; }
  int zero() const { return (size_ - 1) / 2; }
  /// Index of l_a + l_b, or -1 when outside.
  int sum(int a, int b) const;
  int l1(int idx) const;
  double dot(int idx, const std::vector<double>& v) const;

 private:
  int n_ = 0;
  int K_ = 0;
  int size_ = 0;
  std::vector<Mode> modes_;
};

/// Scalar function on the torus as a truncated Fourier series.
struct TorusFunction {
  FourierLattice lattice;
  std::vector<cplx> coeffs;

  static TorusFunction zero(int n_freq, int K);
  cplx& operator[](const Mode& l) { return coeffs.at(lattice.index(l)); }
  cplx operator[](const Mode& l) const { return coeffs.at(lattice.index(l)); }
  cplx eval(const std::vector<double>& phi) const;
  cplx mean() const { return coeffs[lattice.zero()]; }
  /// max |c(-l) - conj c(l)|: zero for real-valued functions.
  double reality_defect() const;
  double strip_norm(double s) const;
};

/// P(phi) = sum_l P^(l) e^{i<l,phi>}, blocks of size N.
class QPMatrix {
 public:
  QPMatrix() = default;
  QPMatrix(int n_freq, int K, int N);

  static QPMatrix identity(int n_freq, int K, int N);
  static QPMatrix constant(int n_freq, int K, const CMat& block);

  int n_freq() const { return lattice_.n_freq(); }
  int K() const { return lattice_.K(); }
  int N() const { return N_; }
  const FourierLattice& lattice() const { return lattice_; }

  CMat& block(int idx) { return blocks_[idx]; }
  const CMat& block(int idx) const { return blocks_[idx]; }
  CMat& operator[](const Mode& l);
  const CMat& operator[](const Mode& l) const;

  bool is_zero_block(int idx) const { return blocks_[idx].cwiseAbs().maxCoeff() == 0.0; }
  bool is_zero() const;

  CMat eval(const std::vector<double>& phi) const;
  /// Q(phi)^* for real phi: block -l becomes the adjoint of block l.
  QPMatrix adjoint() const;
  /// max over l of max |Q^(-l) - Q^(l)^*|.
  double hermitian_defect() const;
  /// Mode l multiplied by i<l, omega> (d/dt along phi = omega t).
  QPMatrix time_derivative(const std::vector<double>& omega) const;
  /// Diagonal entries as torus functions.
  std::vector<TorusFunction> diagonal() const;
  double max_abs() const;

  QPMatrix& operator+=(const QPMatrix& o);
  QPMatrix& operator-=(const QPMatrix& o);
  QPMatrix& operator*=(cplx a);
  friend QPMatrix operator+(QPMatrix a, const QPMatrix& b) { return a += b; }
  friend QPMatrix operator-(QPMatrix a, const QPMatrix& b) { return a -= b; }
  friend QPMatrix operator*(cplx a, QPMatrix b) { return b *= a; }

 private:
  void check_compatible(const QPMatrix& o) const;

  FourierLattice lattice_;
  int N_ = 0;
  std::vector<CMat> blocks_;
};

enum class NormKind { Beta, BetaPlus };

/// sum_l e^{|l|_1 s} |Q^(l)|, the weighted-l1 majorant of the sup over the strip.
double strip_norm(const QPMatrix& Q, double beta, double s, NormKind kind = NormKind::Beta, double iota = 4.0 / 3.0);

/// Convolution product truncated to |l|_inf <= K. `tail` (if given) receives
/// sum ||A^(a)||_F ||B^(b)||_F over dropped pairs.
QPMatrix qp_product(const QPMatrix& A, const QPMatrix& B, double* tail = nullptr);
/// Commutator AB - BA in the same truncated algebra.
QPMatrix qp_commutator(const QPMatrix& A, const QPMatrix& B, double* tail = nullptr);
/// e^B by scaling and squaring with a Taylor core.
QPMatrix qp_exp(const QPMatrix& B, double* tail = nullptr);

/// max over sampled phi of ||U(phi)^* U(phi) - I||_max.
double unitarity_defect(const QPMatrix& U, const std::vector<std::vector<double>>& phis);
/// 16^n equispaced real phases (per axis m points).
std::vector<std::vector<double>> torus_samples(int n_freq, int per_axis = 16);

struct AlgebraReport {
  bool power_difference_ok = false;
  double power_difference_ratio = 0.0;  // min LHS/RHS over k != j
  double C_product_beta = 0.0;     // |AB|_b <= C |A|_b |B|_b+
  double C_product_plus = 0.0;     // |AB|_b+ <= C |A|_b+ |B|_b+
  double C_op = 0.0;               // ||A||_{l2_s} <= C |A|_b+, worst s
  double C_exp = 0.0;              // ||e^B - I||+ <= ||B||+ e^{C ||B||+}
  double unitarity = 0.0;          // worst qp_exp unitarity defect
  bool all_ok = false;
};

/// Random-matrix check of the product, operator-norm and exponential bounds
/// plus the exhaustive power-difference inequality for k, j <= 200.
AlgebraReport verify_algebra(int trials, int N, double beta, double iota, std::uint64_t seed, double cap = 10.0);

/// |k^iota - j^iota| >= (1/2)|k - j|(k^{iota-1} + j^{iota-1}) for k, j <= kmax;
/// returns the minimum of LHS/RHS over k != j.
double power_difference_margin(double iota, int kmax = 200);

}  // namespace kamred
