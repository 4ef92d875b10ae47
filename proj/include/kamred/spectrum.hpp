#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "kamred/potential.hpp"

namespace kamred {

/// Uniform grid on [-L, L]; n_pts odd so x = 0 is a node.
struct Grid {
  double L = 8.0;
  int n_pts = 4001;

  double h() const { return 2.0 * L / (n_pts - 1); }
  double x(int i) const { return -L + i * h(); }
  int center() const { return (n_pts - 1) / 2; }
  /// Throws Validation unless n_pts >= 3 is odd and L > 0.
  void validate() const;
};

enum class Parity { Even, Odd };

/// Eigenpairs of -d^2/dx^2 + V on a grid. Eigenfunctions are stored on the
/// full grid (the Dirichlet walls are zero) and indexed from 1.
struct SpectralBasis {
  Grid grid;
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> eigfuns;
  std::vector<Parity> parity;

  int count() const { return static_cast<int>(lambdas.size()); }
  double lambda(int j) const { return lambdas.at(j - 1); }
  const Eigen::VectorXd& h(int j) const { return eigfuns.at(j - 1); }
  Eigen::VectorXd xs() const;
};

struct Eigenpair {
  double lambda = 0.0;
  Eigen::VectorXd h;
  Parity parity = Parity::Even;
};

/// Number of eigenvalues of the discretized operator strictly below E.
int sturm_count(const Potential& V, const Grid& grid, double E);

/// The j-th (1-based) eigenpair, normalized and sign-fixed. No tail checks.
Eigenpair solve_eigenpair(const Potential& V, const Grid& grid, int j);

/// Richardson combination of the j-th eigenpair on grid and on its 2x
/// refinement, sampled on the coarse nodes; error O(h^4).
Eigenpair solve_eigenpair_extrapolated(const Potential& V, const Grid& grid, int j);

/// Grid sized for one eigenvalue: V(0.9 L) >= 4 lambda and the given
/// number of points per local wavelength 2 pi / sqrt(lambda).
Grid grid_for_energy(const Potential& V, double lambda, int points_per_wavelength);

/// First J eigenpairs with the truncation and tail checks.
SpectralBasis solve_spectrum(const Potential& V, const Grid& grid, int J);

/// WKB estimate of lambda_j for the leading monomial c0 |x|^{2 ell}.
double weyl_estimate(const PotentialSpec& spec, int j);

/// Grid with V(0.9 L) >= 4 lambda_J^est and about points_per_wavelength
/// nodes per local wavelength at lambda_J^est.
Grid auto_grid(const Potential& V, int J, int points_per_wavelength = 40);

struct WeylFit {
  double exponent = 0.0;
  double prefactor = 0.0;
};

/// Least-squares slope of log lambda_j against log j for j in [j_lo, j_hi].
WeylFit weyl_fit(const std::vector<double>& lambdas, int j_lo, int j_hi);
WeylFit weyl_fit(const SpectralBasis& basis, int j_lo, int j_hi);

/// Trapezoid inner product on the basis grid.
double inner(const Grid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

void write_eigenvalues_csv(std::ostream& os, const SpectralBasis& basis);
void write_eigenfunctions_csv(std::ostream& os, const SpectralBasis& basis);

}  // namespace kamred
