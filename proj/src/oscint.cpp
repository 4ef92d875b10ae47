#include "kamred/oscint.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "kamred/error.hpp"

namespace kamred {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(8);
  os << x;
  return os.str();
}

}  // namespace

double WeightSpec::value(double x) const {
  if (f) return f(x);
  return std::pow(1.0 + x * x, 0.5 * mu);
}

double WeightSpec::derivative(double x) const {
  if (df) return df(x);
  return mu * x * std::pow(1.0 + x * x, 0.5 * mu - 1.0);
}

double WeightSpec::fit_c2(const Grid& grid, double R0) const {
  double c2 = 0.0;
  for (int i = 0; i < grid.n_pts; ++i) {
    const double ax = std::abs(grid.x(i));
    if (ax < R0 || ax == 0.0) continue;
    c2 = std::max(c2, std::abs(value(grid.x(i))) / std::pow(ax, mu));
    c2 = std::max(c2, std::abs(derivative(grid.x(i))) / std::pow(ax, mu - 1.0));
  }
  if (!std::isfinite(c2)) throw Error(ErrorCode::Validation, "weight: growth constant C2 is not finite on the grid");
  return c2;
}

cplx matrix_element(const WeightSpec& f, double k, const Eigen::VectorXd& hm, const Eigen::VectorXd& hn,
                    const Grid& grid) {
  const double h = grid.h();
  if (std::abs(k) * h > 0.3) {
    throw Error(ErrorCode::UnderResolved, "matrix_element: |k| h = " + num(std::abs(k) * h) +
                                              " exceeds 0.3; need h <= " + num(0.3 / std::abs(k)));
  }
  if (hm.size() != grid.n_pts || hn.size() != grid.n_pts) {
    throw Error(ErrorCode::GridMismatch, "matrix_element: eigenfunctions do not match the grid");
  }
  double re = 0.0;
  double im = 0.0;
  for (int i = 0; i < grid.n_pts; ++i) {
    const double x = grid.x(i);
    double w = f.value(x) * hm(i) * hn(i);
    if (i == 0 || i == grid.n_pts - 1) w *= 0.5;
    re += w * std::cos(k * x);
    im += w * std::sin(k * x);
  }
  return {re * h, im * h};
}

cplx matrix_element(const WeightSpec& f, double k, int m, int n, const SpectralBasis& basis) {
  if (m < 1 || n < 1 || m > basis.count() || n > basis.count()) {
    throw Error(ErrorCode::UnsupportedIndex, "matrix_element: index outside the basis");
  }
  return matrix_element(f, k, basis.h(m), basis.h(n), basis.grid);
}

RefinedElement matrix_element_refined(const Potential& V, const WeightSpec& f, double k, int m, int n,
                                      const Grid& grid) {
  const Grid fine{grid.L, 2 * grid.n_pts - 1};
  RefinedElement out;
  out.coarse = matrix_element(f, k, solve_eigenpair_extrapolated(V, grid, m).h,
                              solve_eigenpair_extrapolated(V, grid, n).h, grid);
  out.fine = matrix_element(f, k, solve_eigenpair_extrapolated(V, fine, m).h,
                            solve_eigenpair_extrapolated(V, fine, n).h, fine);
  out.change = std::abs(out.fine - out.coarse);
  return out;
}

double decay_exponent(double mu, double ell) {
  const double m = std::min(1.0 / 3.0, (mu + 1.0) / (2.0 * mu + 2.0 * ell + 1.0));
  return mu / (4.0 * ell) - m / (4.0 * ell);
}

double decay_bound(double mu, double ell, double k, double lambda_m, double lambda_n) {
  if (k == 0.0) throw Error(ErrorCode::Domain, "decay_bound: k = 0 uses the diagonal bound");
  if (mu < 0.0) throw Error(ErrorCode::Domain, "decay_bound: mu must be nonnegative");
  const double ak = std::abs(k);
  return std::max(ak, 1.0 / ak) * std::pow(lambda_m * lambda_n, decay_exponent(mu, ell));
}

double diagonal_bound(double mu, double ell, double lambda_m, double lambda_n) {
  return std::pow(lambda_m * lambda_n, mu / (4.0 * ell));
}

ExponentFit exponent_fit(const WeightSpec& f, double k, const SpectralBasis& basis, int n_lo, int n_hi) {
  if (n_hi - n_lo + 1 < 10 || n_lo < 1 || n_hi > basis.count()) {
    throw Error(ErrorCode::Domain, "exponent_fit: need at least 10 indices inside the basis");
  }
  std::vector<double> lx, ly;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double a = std::abs(matrix_element(f, k, n, n, basis));
    if (a < 1e-13) continue;
    lx.push_back(std::log(basis.lambda(n) * basis.lambda(n)));
    ly.push_back(std::log(a));
  }
  if (lx.size() < 2) throw Error(ErrorCode::DegenerateFit, "exponent_fit: sampled elements are all below 1e-13");
  const double m = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  ExponentFit fit;
  fit.E_fit = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.C_fit = std::exp((sy - fit.E_fit * sx) / m);
  fit.used = static_cast<int>(lx.size());
  return fit;
}

std::vector<ScanRow> oscint_scan(const WeightSpec& f, double k, double ell, const SpectralBasis& basis, int n_lo,
                                 int n_hi, const std::vector<int>& offsets) {
  std::vector<ScanRow> rows;
  for (int n = n_lo; n <= n_hi; ++n) {
    for (int d : offsets) {
      const int m = n - d;
      if (m < 1) continue;
      ScanRow row;
      row.m = m;
      row.n = n;
      row.k = k;
      row.value = matrix_element(f, k, m, n, basis);
      row.bound = k == 0.0 ? diagonal_bound(f.mu, ell, basis.lambda(m), basis.lambda(n))
                           : decay_bound(f.mu, ell, k, basis.lambda(m), basis.lambda(n));
      rows.push_back(row);
    }
  }
  return rows;
}

double fitted_constant(const std::vector<ScanRow>& rows) {
  double c = 0.0;
  for (const auto& r : rows) c = std::max(c, std::abs(r.value) / r.bound);
  return c;
}

void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
  os << "m,n,k,re,im,abs,bound\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.m << ',' << r.n << ',' << r.k << ',' << r.value.real() << ',' << r.value.imag() << ','
       << std::abs(r.value) << ',' << r.bound << '\n';
  }
}

}  // namespace kamred
