#include "kamred/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
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

std::vector<double> diagonal(const Potential& V, const Grid& grid) {
  const int M = grid.n_pts - 2;
  const double h2 = grid.h() * grid.h();
  std::vector<double> d(M);
  for (int i = 0; i < M; ++i) d[i] = 2.0 / h2 + V(grid.x(i + 1));
  return d;
}

int count_below(const std::vector<double>& d, double off2, double E) {
  int neg = 0;
  double q = d[0] - E;
  if (q < 0.0) ++neg;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = std::numeric_limits<double>::epsilon() * (std::abs(d[i]) + 1.0);
    q = d[i] - E - off2 / q;
    if (q < 0.0) ++neg;
  }
  return neg;
}

// Solves (T - E) y = b for T with diagonal d and constant off-diagonal e,
// Gaussian elimination with partial pivoting. b is overwritten by y.
void shifted_solve(const std::vector<double>& d0, double e, double E, std::vector<double>& b) {
  const std::size_t n = d0.size();
  std::vector<double> d(n), dl(n, e), du(n, e), du2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = d0[i] - E;
  const double tiny = std::numeric_limits<double>::epsilon() * (std::abs(d0.back()) + std::abs(e));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      du[i] = temp;
      const double bt = b[i];
      b[i] = b[i + 1];
      b[i + 1] = bt - fact * b[i + 1];
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = tiny;
  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(n) - 3; k >= 0; --k) {
    b[k] = (b[k] - du[k] * b[k + 1] - du2[k] * b[k + 2]) / d[k];
  }
}

}  // namespace

void Grid::validate() const {
  if (!(L > 0.0)) throw Error(ErrorCode::Validation, "grid: L must be positive");
  if (n_pts < 3 || n_pts % 2 == 0) {
    throw Error(ErrorCode::Validation, "grid: n_pts must be odd and >= 3, got " + std::to_string(n_pts));
  }
}

Eigen::VectorXd SpectralBasis::xs() const {
  Eigen::VectorXd x(grid.n_pts);
  for (int i = 0; i < grid.n_pts; ++i) x(i) = grid.x(i);
  return x;
}

double inner(const Grid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  // Walls are zero for eigenfunctions, but keep the trapezoid end weights.
  const Eigen::Index n = a.size();
  double s = a.dot(b) - 0.5 * (a(0) * b(0) + a(n - 1) * b(n - 1));
  return s * grid.h();
}

int sturm_count(const Potential& V, const Grid& grid, double E) {
  grid.validate();
  const double h2 = grid.h() * grid.h();
  return count_below(diagonal(V, grid), 1.0 / (h2 * h2), E);
}

Eigenpair solve_eigenpair(const Potential& V, const Grid& grid, int j) {
  grid.validate();
  const int M = grid.n_pts - 2;
  if (j < 1 || j > M) {
    throw Error(ErrorCode::UnsupportedIndex, "eigenpair index " + std::to_string(j) + " outside 1.." + std::to_string(M));
  }
  const double h2 = grid.h() * grid.h();
  const double e = -1.0 / h2;
  const double off2 = e * e;
  const std::vector<double> d = diagonal(V, grid);

  // Gershgorin bracket, then bisection on the Sturm count.
  double lo = *std::min_element(d.begin(), d.end()) - 2.0 * std::abs(e);
  double hi = *std::max_element(d.begin(), d.end()) + 2.0 * std::abs(e);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    (count_below(d, off2, mid) >= j ? hi : lo) = mid;
  }
  const double shift = 0.5 * (lo + hi);

  // Inverse iteration from a fixed generic start vector.
  std::vector<double> v(M);
  for (int i = 0; i < M; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * i + 0.3);
  for (int it = 0; it < 4; ++it) {
    shifted_solve(d, e, shift, v);
    double norm = 0.0;
    for (double y : v) norm += y * y;
    norm = std::sqrt(norm);
    for (double& y : v) y /= norm;
  }

  // Rayleigh quotient (v has unit Euclidean norm).
  double rq = 0.0;
  for (int i = 0; i < M; ++i) {
    double tv = d[i] * v[i];
    if (i > 0) tv += e * v[i - 1];
    if (i + 1 < M) tv += e * v[i + 1];
    rq += v[i] * tv;
  }

  Eigenpair out;
  out.lambda = rq;
  out.h = Eigen::VectorXd::Zero(grid.n_pts);
  for (int i = 0; i < M; ++i) out.h(i + 1) = v[i];
  out.h /= std::sqrt(inner(grid, out.h, out.h));

  const int c = grid.center();
  const double scale = out.h.cwiseAbs().maxCoeff();
  for (int i = c + 1; i < grid.n_pts; ++i) {
    if (std::abs(out.h(i)) > 1e-10 * scale) {
      if (out.h(i) < 0.0) out.h = -out.h;
      break;
    }
  }
  double even = 0.0;
  double odd = 0.0;
  for (int i = 1; i <= c; ++i) {
    even += std::abs(out.h(c + i) + out.h(c - i));
    odd += std::abs(out.h(c + i) - out.h(c - i));
  }
  out.parity = odd <= even ? Parity::Even : Parity::Odd;
  return out;
}

SpectralBasis solve_spectrum(const Potential& V, const Grid& grid, int J) {
  grid.validate();
  if (J < 1) throw Error(ErrorCode::Validation, "solve_spectrum: J must be >= 1");
  SpectralBasis basis;
  basis.grid = grid;
  for (int j = 1; j <= J; ++j) {
    Eigenpair p = solve_eigenpair(V, grid, j);
    basis.lambdas.push_back(p.lambda);
    basis.eigfuns.push_back(std::move(p.h));
    basis.parity.push_back(p.parity);
  }

  const double lamJ = basis.lambdas.back();
  const double VL = V(grid.L);
  if (!(lamJ < 0.5 * VL)) {
    throw Error(ErrorCode::Truncation, "solve_spectrum: lambda_" + std::to_string(J) + "=" + num(lamJ) +
                                           " is not below V(L)/2=" + num(0.5 * VL) + "; enlarge L");
  }
  double tail = 0.0;
  for (int i = 0; i < grid.n_pts; ++i) {
    if (std::abs(grid.x(i)) < 0.95 * grid.L) continue;
    for (const auto& h : basis.eigfuns) tail = std::max(tail, std::abs(h(i)));
  }
  if (!(tail < 1e-8)) {
    // Suggest the auto-sizing radius for this lambda_J.
    double Ls = grid.L;
    while (V(0.9 * Ls) < 4.0 * lamJ) Ls *= 1.05;
    Ls = std::max(Ls, 1.25 * grid.L);
    throw Error(ErrorCode::DomainTooSmall, "solve_spectrum: eigenfunction tail " + num(tail) +
                                               " on the outer 5% exceeds 1e-8; suggested L=" + num(Ls));
  }
  return basis;
}

double weyl_estimate(const PotentialSpec& spec, int j) {
  const double ell = spec.ell;
  const double a = 1.0 / (2.0 * ell);
  // I = int_0^1 sqrt(1 - t^{2 ell}) dt = B(1/(2ell), 3/2) / (2ell)
  const double I = std::exp(std::lgamma(a) + std::lgamma(1.5) - std::lgamma(a + 1.5)) / (2.0 * ell);
  const double base = std::numbers::pi * (j - 0.5) * std::pow(spec.c0, a) / (2.0 * I);
  return std::pow(base, 2.0 * ell / (ell + 1.0));
}

Eigenpair solve_eigenpair_extrapolated(const Potential& V, const Grid& grid, int j) {
  const Grid fine{grid.L, 2 * grid.n_pts - 1};
  Eigenpair coarse = solve_eigenpair(V, grid, j);
  const Eigenpair refined = solve_eigenpair(V, fine, j);
  Eigenpair out;
  out.parity = coarse.parity;
  out.lambda = (4.0 * refined.lambda - coarse.lambda) / 3.0;
  out.h.resize(grid.n_pts);
  for (int i = 0; i < grid.n_pts; ++i) out.h(i) = (4.0 * refined.h(2 * i) - coarse.h(i)) / 3.0;
  out.h /= std::sqrt(inner(grid, out.h, out.h));
  return out;
}

Grid grid_for_energy(const Potential& V, double lambda, int points_per_wavelength) {
  const double lam = std::max(lambda, 1e-12);
  double L = std::max(1.0, V.spec().R0);
  while (V(0.9 * L) < 4.0 * lam) L *= 1.02;
  // low energies: the forbidden region is short, so also ask for enough WKB decay
  auto decay = [&](double Lc) {
    double a = 0.0;
    const int m = 400;
    for (int i = 0; i < m; ++i) {
      const double x = 0.9 * Lc * (i + 0.5) / m;
      a += std::sqrt(std::max(0.0, V(x) - lam));
    }
    return a * 0.9 * Lc / m;
  };
  while (decay(L) < 20.0) L *= 1.02;
  const double h = 2.0 * std::numbers::pi / std::sqrt(lam) / points_per_wavelength;
  int n = static_cast<int>(std::ceil(2.0 * L / h)) + 1;
  if (n % 2 == 0) ++n;
  return Grid{L, std::max(n, 3)};
}

Grid auto_grid(const Potential& V, int J, int points_per_wavelength) {
  return grid_for_energy(V, weyl_estimate(V.spec(), J) + std::max(0.0, V(0.0)), points_per_wavelength);
}

WeylFit weyl_fit(const std::vector<double>& lambdas, int j_lo, int j_hi) {
  if (j_lo < 1 || j_hi > static_cast<int>(lambdas.size()) || j_hi - j_lo + 1 < 10) {
    throw Error(ErrorCode::Domain, "weyl_fit: window [" + std::to_string(j_lo) + "," + std::to_string(j_hi) +
                                       "] must lie in 1.." + std::to_string(lambdas.size()) +
                                       " and hold at least 10 indices");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int m = j_hi - j_lo + 1;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double lx = std::log(static_cast<double>(j));
    const double ly = std::log(lambdas[j - 1]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  WeylFit fit;
  fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.prefactor = std::exp((sy - fit.exponent * sx) / m);
  return fit;
}

WeylFit weyl_fit(const SpectralBasis& basis, int j_lo, int j_hi) { return weyl_fit(basis.lambdas, j_lo, j_hi); }

void write_eigenvalues_csv(std::ostream& os, const SpectralBasis& basis) {
  os << "j,lambda\n";
  os.precision(17);
  for (int j = 1; j <= basis.count(); ++j) os << j << ',' << basis.lambda(j) << '\n';
}

void write_eigenfunctions_csv(std::ostream& os, const SpectralBasis& basis) {
  os << "x";
  for (int j = 1; j <= basis.count(); ++j) os << ",h" << j;
  os << '\n';
  os.precision(12);
  for (int i = 0; i < basis.grid.n_pts; ++i) {
    os << basis.grid.x(i);
    for (int j = 1; j <= basis.count(); ++j) os << ',' << basis.h(j)(i);
    os << '\n';
  }
}

}  // namespace kamred
