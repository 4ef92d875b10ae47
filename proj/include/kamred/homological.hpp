#pragma once

#include <vector>

#include "kamred/error.hpp"
#include "kamred/matclass.hpp"

namespace kamred {

/// (<l,omega> + E1) chi^(l) + (E2h * chi)^(l) = b^(l) for |l|_inf <= K,
/// i.e. -i <omega, d_phi> chi + E1 chi + E2h chi = b on the truncation.
struct HomologicalProblem {
  std::vector<double> omega;
  double E1 = 0.0;
  TorusFunction E2h;  // may be on a smaller lattice than b
  TorusFunction b;    // sets the cutoff K of chi
  double divisor_floor = 1e-10;
};

struct ScalarSolution {
  TorusFunction chi;
  double min_divisor = 0.0;
  Mode min_divisor_mode;
  double rcond = 1.0;  // reciprocal condition estimate of the Galerkin matrix
};

/// Dense Galerkin solve. ResonantDivisor if some |<l,omega> + E1| is below
/// the floor, Singular if the Galerkin matrix is numerically singular.
ScalarSolution solve_scalar(const HomologicalProblem& problem);

/// max over phi samples of |(-i<omega,d> + E1 + E2h) chi - b| (lattice-exact
/// Fourier evaluation of the left side).
double scalar_residual(const HomologicalProblem& problem, const TorusFunction& chi,
                       const std::vector<std::vector<double>>& phis);

struct Resonance {
  int i = 0;
  int j = 0;
  Mode l;
  double divisor = 0.0;
};

/// Carries every resonant (i, j, l) of a generator solve.
class ResonanceError : public Error {
 public:
  ResonanceError(std::vector<Resonance> list, const std::string& message)
      : Error(ErrorCode::Resonance, message), list_(std::move(list)) {}
  const std::vector<Resonance>& resonances() const { return list_; }

 private:
  std::vector<Resonance> list_;
};

struct GeneratorOptions {
  double divisor_floor = 1e-10;
  /// Modes with |l|_inf above this are left in the perturbation (-1: all).
  int mode_cutoff = -1;
  /// Divisors below this are reported as near-floor warnings.
  double warn_divisor = 1e-6;
  /// When theta > 0, the order constant C0 = min E1^theta / E2 is fitted,
  /// E2 = strip_norm(mu_i - mu_j, s) + 1.
  double theta = 0.0;
  double s = 0.0;
};

struct GeneratorResult {
  QPMatrix B;
  double min_divisor = 0.0;
  Resonance min_divisor_at;
  double projection_residual = 0.0;  // max entry of (B + B^*)/2 before projection
  double worst_rcond = 1.0;
  int near_floor = 0;                // pairs with a divisor below warn_divisor
  double order_C0 = 0.0;
};

/// Solves [A, B] - i dB/dt + (P - diag P) = 0 for A = diag(lambda_i + mu_i(phi)),
/// pair by pair; B_ii = 0 and the result is projected to anti-Hermitian form.
GeneratorResult solve_generator(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus,
                                const QPMatrix& P, const std::vector<double>& omega,
                                const GeneratorOptions& opts = {});

/// diag(lambda_i + mu_i(phi)) as a QPMatrix on P's lattice.
QPMatrix normal_form_matrix(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus, int n_freq,
                            int K);

/// [A, B] - i dB/dt + (P - diag P), in the truncated algebra.
QPMatrix generator_residual(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus,
                            const QPMatrix& P, const QPMatrix& B, const std::vector<double>& omega);

/// P with the diagonal entries removed.
QPMatrix off_diagonal(const QPMatrix& P);

}  // namespace kamred
