#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "kamred/special.hpp"
#include "kamred/spectrum.hpp"

namespace kamred {

/// Weight f with |f| ~ |x|^mu at infinity: either <x>^mu or a user function
/// with its derivative.
struct WeightSpec {
  double mu = 0.0;
  std::function<double(double)> f;   // empty: japanese bracket
  std::function<double(double)> df;

  static WeightSpec bracket(double mu) { return WeightSpec{mu, {}, {}}; }
  static WeightSpec custom(double mu, std::function<double(double)> f, std::function<double(double)> df) {
    return WeightSpec{mu, std::move(f), std::move(df)};
  }

  double value(double x) const;
  double derivative(double x) const;

  /// Smallest C2 with |f| <= C2|x|^mu and |f'| <= C2|x|^{mu-1} on the grid
  /// nodes with |x| >= R0.
  double fit_c2(const Grid& grid, double R0) const;
};

/// int f(x) e^{ikx} h_m(x) h_n(x) dx by the trapezoid rule on the basis grid.
/// Refuses |k| h > 0.3 with UnderResolved.
cplx matrix_element(const WeightSpec& f, double k, int m, int n, const SpectralBasis& basis);
cplx matrix_element(const WeightSpec& f, double k, const Eigen::VectorXd& hm, const Eigen::VectorXd& hn,
                    const Grid& grid);

/// Same element on grid and on the 2x refined grid (same L).
struct RefinedElement {
  cplx coarse;
  cplx fine;
  double change = 0.0;
};
RefinedElement matrix_element_refined(const Potential& V, const WeightSpec& f, double k, int m, int n,
                                      const Grid& grid);

/// Exponent E of the oscillatory bound (per lambda_m lambda_n).
double decay_exponent(double mu, double ell);
/// (|k| v |k|^{-1}) (lambda_m lambda_n)^E; k = 0 refused.
double decay_bound(double mu, double ell, double k, double lambda_m, double lambda_n);
/// k = 0 path: (lambda_m lambda_n)^{mu/(4 ell)}.
double diagonal_bound(double mu, double ell, double lambda_m, double lambda_n);

struct ExponentFit {
  double E_fit = 0.0;
  double C_fit = 0.0;
  int used = 0;
};

/// Fit of log|M_nn| against log(lambda_n^2) for n in [n_lo, n_hi].
ExponentFit exponent_fit(const WeightSpec& f, double k, const SpectralBasis& basis, int n_lo, int n_hi);

struct ScanRow {
  int m = 0;
  int n = 0;
  double k = 0.0;
  cplx value;
  double bound = 0.0;
};

/// Lines (n - d, n), n in [n_lo, n_hi], d in offsets.
std::vector<ScanRow> oscint_scan(const WeightSpec& f, double k, double ell, const SpectralBasis& basis, int n_lo,
                                 int n_hi, const std::vector<int>& offsets);

/// max |M| / bound over the rows: the single constant of the family.
double fitted_constant(const std::vector<ScanRow>& rows);

void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows);

}  // namespace kamred
