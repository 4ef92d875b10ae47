#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kamred/potential.hpp"
#include "kamred/special.hpp"
#include "kamred/spectrum.hpp"

namespace kamred {

/// Phase integral zeta(x) = int_X^x sqrt(lambda - V), x >= 0.
/// Negative real for x < X, positive imaginary for x > X.
cplx zeta(const Potential& V, double lambda, double X, double x);

/// zeta at ascending nonnegative nodes, accumulated interval by interval.
std::vector<cplx> zeta_samples(const Potential& V, double lambda, double X, const std::vector<double>& xs);

/// Smallest n with lambda_n >= V(R), R the threshold radius; 0 if none.
int first_turning_index(const Potential& V, const std::vector<double>& lambdas);

struct TurningPointFrame {
  int n = 0;
  double lambda = 0.0;
  double X = 0.0;
  std::vector<double> x;     // nonnegative grid nodes
  std::vector<cplx> zeta;    // zeta at those nodes
  cplx Cn{0.0, 0.0};         // set by langer_eigenfunction
  double a1 = 0.0, a2 = 0.0, A1 = 0.0, A2 = 0.0;  // set by verify_turning_bounds
};

/// Throws UnsupportedIndex when lambda < V(R) (no turning point beyond R).
TurningPointFrame make_frame(const Potential& V, const Grid& grid, int n, double lambda);

struct LangerApprox {
  Eigen::VectorXd psi;        // on the full grid, parity (-1)^{n-1}
  std::vector<bool> reliable; // false within X^{-1/3} of +-X
  cplx Cn{0.0, 0.0};
  double Cn_scaled = 0.0;     // |C_n| / X^{(ell-1)/2}
  double imag_residue = 0.0;  // max |Im| / max |Re| before the real projection
  double err_l2 = 0.0;        // ||h - psi|| / ||psi|| off the window
  double err_sup = 0.0;       // sup |h - psi| / sup |h| off the window
};

/// Langer approximation with C_n fixed by L2 normalization on the grid and
/// its sign aligned with h (the reference eigenfunction on the same grid).
LangerApprox langer_eigenfunction(TurningPointFrame& frame, const Potential& V, const Grid& grid,
                                  const Eigen::VectorXd& h);

struct TurningBoundsReport {
  double a1 = 0.0, a2 = 0.0, A1 = 0.0, A2 = 0.0;
  double taylor_ratio = 0.0;  // (lambda - V)/(X^{2l-1}(X - x)) as x -> X-
  double origin_ratio = 0.0;  // (lambda - V(0))/X^{2l}
  bool ok = false;
  double violating_x = 0.0;
  std::string violation;
};

/// Tightest constants in the two-sided linear bounds on lambda - V and the
/// 3/2-power bounds on zeta over [0, X) and (X, 2X].
TurningBoundsReport verify_turning_bounds(TurningPointFrame& frame, const Potential& V, int samples = 400);

struct LangerRow {
  int n = 0;
  double lambda = 0.0;
  double X = 0.0;
  double err_l2 = 0.0;
  double err_sup = 0.0;
  double Cn_scaled = 0.0;
  double imag_residue = 0.0;
  double h_sup = 0.0;
  TurningBoundsReport bounds;
};

/// For each n: grid sized for lambda_n, Richardson eigenpair, Langer
/// approximation and turning-point bounds.
std::vector<LangerRow> langer_check(const Potential& V, const std::vector<int>& ns, int points_per_wavelength = 60);

/// Least-squares slope of log err_l2 against log X.
double error_law_slope(const std::vector<LangerRow>& rows);

void write_langer_csv(std::ostream& os, const std::vector<LangerRow>& rows);

}  // namespace kamred
