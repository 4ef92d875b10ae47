#include "kamred/langer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kamred/error.hpp"
#include "kamred/quadrature.hpp"

namespace kamred {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Integrand of zeta after t = X -+ u^2: 2u sqrt(+-(lambda - V(t))).
struct PhaseIntegrand {
  const Potential& V;
  double lambda;
  double X;
  double side;  // -1 left of X, +1 right

  double operator()(double u) const {
    const double t = X + side * u * u;
    const double g = side < 0 ? lambda - V(t) : V(t) - lambda;
    if (g < -1e-12 * std::max(1.0, std::abs(lambda))) {
      throw Error(ErrorCode::Branch, "zeta: lambda - V changes sign at t=" + num(t) + " inside the integration interval");
    }
    return 2.0 * u * std::sqrt(std::max(g, 0.0));
  }
};

cplx as_zeta(double side, double integral) { return side < 0 ? cplx(-integral, 0.0) : cplx(0.0, integral); }

}  // namespace

cplx zeta(const Potential& V, double lambda, double X, double x) {
  if (x < 0.0) throw Error(ErrorCode::Domain, "zeta: x must be nonnegative");
  if (x == X) return {0.0, 0.0};
  const double side = x < X ? -1.0 : 1.0;
  const double u_end = std::sqrt(std::abs(x - X));
  const int panels = 8 + static_cast<int>(4.0 * u_end);
  return as_zeta(side, integrate_gl(PhaseIntegrand{V, lambda, X, side}, 0.0, u_end, 20, panels));
}

std::vector<cplx> zeta_samples(const Potential& V, double lambda, double X, const std::vector<double>& xs) {
  std::vector<cplx> out(xs.size());
  const auto split = std::lower_bound(xs.begin(), xs.end(), X) - xs.begin();

  // Left of X, walking outward from the turning point.
  PhaseIntegrand left{V, lambda, X, -1.0};
  double acc = 0.0;
  double u_prev = 0.0;
  for (auto k = split; k-- > 0;) {
    const double u = std::sqrt(X - xs[k]);
    acc += integrate_gl(left, u_prev, u, 10);
    u_prev = u;
    out[k] = as_zeta(-1.0, acc);
  }

  PhaseIntegrand right{V, lambda, X, 1.0};
  acc = 0.0;
  u_prev = 0.0;
  for (auto k = split; k < static_cast<std::ptrdiff_t>(xs.size()); ++k) {
    if (xs[k] == X) continue;
    const double u = std::sqrt(xs[k] - X);
    acc += integrate_gl(right, u_prev, u, 10);
    u_prev = u;
    out[k] = as_zeta(1.0, acc);
  }
  return out;
}

int first_turning_index(const Potential& V, const std::vector<double>& lambdas) {
  const double VR = V(V.threshold_radius());
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (lambdas[j] >= VR) return static_cast<int>(j) + 1;
  }
  return 0;
}

TurningPointFrame make_frame(const Potential& V, const Grid& grid, int n, double lambda) {
  const double VR = V(V.threshold_radius());
  if (lambda < VR) {
    throw Error(ErrorCode::UnsupportedIndex, "langer: n=" + std::to_string(n) + " has lambda=" + num(lambda) +
                                                 " below V(R)=" + num(VR) + "; the turning-point form needs n >= n0");
  }
  TurningPointFrame frame;
  frame.n = n;
  frame.lambda = lambda;
  frame.X = V.turning_point(lambda);
  for (int i = grid.center(); i < grid.n_pts; ++i) frame.x.push_back(std::abs(grid.x(i)));
  frame.x.front() = 0.0;
  frame.zeta = zeta_samples(V, lambda, frame.X, frame.x);
  return frame;
}

LangerApprox langer_eigenfunction(TurningPointFrame& frame, const Potential& V, const Grid& grid,
                                  const Eigen::VectorXd& h) {
  const double pi = std::numbers::pi;
  const double X = frame.X;
  const std::size_t m = frame.x.size();
  if (static_cast<int>(m) != grid.center() + 1 || h.size() != grid.n_pts) {
    throw Error(ErrorCode::GridMismatch, "langer_eigenfunction: frame, grid and eigenfunction disagree in size");
  }

  std::vector<cplx> raw(m);
  std::vector<bool> singular(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    const double x = frame.x[k];
    const cplx z = frame.zeta[k];
    if (std::abs(z) < 1e-12) {
      singular[k] = true;
      continue;
    }
    if (x < X) {
      // zeta = r e^{-i pi}: (pi zeta/2)^{1/2} = -i sqrt(pi r/2).
      const double r = -z.real();
      raw[k] = std::pow(frame.lambda - V(x), -0.25) * std::sqrt(pi * r / 2.0) * cplx(0.0, -1.0) * hankel_13_lower(r);
    } else {
      // lambda - V < 0 on the principal branch, zeta = i q.
      const double q = z.imag();
      if (q > 50.0) continue;
      const cplx quarter = std::pow(cplx(frame.lambda - V(x), 0.0), -0.25);
      raw[k] = quarter * std::sqrt(pi * z / 2.0) * hankel_13(z);
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!singular[k]) continue;
    const cplx a = k > 0 ? raw[k - 1] : raw[k + 1];
    const cplx b = k + 1 < m ? raw[k + 1] : raw[k - 1];
    raw[k] = 0.5 * (a + b);
  }

  cplx square_sum{0.0, 0.0};
  for (const cplx& v : raw) square_sum += v * v;
  const cplx rotate = std::exp(cplx(0.0, -0.5 * std::arg(square_sum)));
  double max_re = 0.0;
  double max_im = 0.0;
  for (const cplx& v : raw) {
    const cplx w = v * rotate;
    max_re = std::max(max_re, std::abs(w.real()));
    max_im = std::max(max_im, std::abs(w.imag()));
  }

  LangerApprox out;
  out.imag_residue = max_im / max_re;
  const int c = grid.center();
  const double parity = frame.n % 2 == 1 ? 1.0 : -1.0;
  out.psi.resize(grid.n_pts);
  for (std::size_t k = 0; k < m; ++k) {
    const double v = (raw[k] * rotate).real();
    out.psi(c + static_cast<int>(k)) = v;
    out.psi(c - static_cast<int>(k)) = parity * v;
  }
  if (parity < 0) out.psi(c) = 0.0;

  const double norm = std::sqrt(inner(grid, out.psi, out.psi));
  const double sign = inner(grid, out.psi, h) < 0.0 ? -1.0 : 1.0;
  out.psi *= sign / norm;
  out.Cn = rotate * (sign / norm);
  frame.Cn = out.Cn;
  out.Cn_scaled = std::abs(out.Cn) / std::pow(X, (V.ell() - 1.0) / 2.0);

  const double window = std::pow(X, -1.0 / 3.0);
  out.reliable.resize(grid.n_pts);
  double diff2 = 0.0;
  double psi2 = 0.0;
  double diff_sup = 0.0;
  for (int i = 0; i < grid.n_pts; ++i) {
    out.reliable[i] = std::abs(std::abs(grid.x(i)) - X) > window;
    if (!out.reliable[i]) continue;
    const double d = h(i) - out.psi(i);
    diff2 += d * d;
    psi2 += out.psi(i) * out.psi(i);
    diff_sup = std::max(diff_sup, std::abs(d));
  }
  out.err_l2 = std::sqrt(diff2 / psi2);
  out.err_sup = diff_sup / h.cwiseAbs().maxCoeff();
  return out;
}

TurningBoundsReport verify_turning_bounds(TurningPointFrame& frame, const Potential& V, int samples) {
  const double X = frame.X;
  const double lam = frame.lambda;
  const double ell = V.ell();
  const double lin = std::pow(X, 2.0 * ell - 1.0);
  const double pw = std::pow(X, ell - 0.5);

  std::vector<double> xs;
  for (int i = 0; i < samples; ++i) xs.push_back(X * i / samples);
  for (int i = 1; i <= samples; ++i) xs.push_back(X + X * i / samples);
  const std::vector<cplx> z = zeta_samples(V, lam, X, xs);

  TurningBoundsReport r;
  r.a1 = r.A1 = std::numeric_limits<double>::infinity();
  r.ok = true;
  auto flag = [&](double x, const std::string& what) {
    if (r.ok) {
      r.ok = false;
      r.violating_x = x;
      r.violation = what;
    }
  };
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double x = xs[k];
    const double gap = std::abs(X - x);
    if (x < X) {
      const double ratio = (lam - V(x)) / (lin * gap);
      const double zr = -z[k].real() / (pw * std::pow(gap, 1.5));
      r.a1 = std::min(r.a1, ratio);
      r.a2 = std::max(r.a2, ratio);
      r.A1 = std::min(r.A1, zr);
      r.A2 = std::max(r.A2, zr);
      if (!(ratio > 0.0)) flag(x, "lambda - V not positive left of X");
      if (!(zr > 0.0)) flag(x, "-zeta not positive left of X");
    } else {
      const double ratio = (V(x) - lam) / (lin * gap);
      const double zr = z[k].imag() / (pw * std::pow(gap, 1.5));
      r.a1 = std::min(r.a1, ratio);
      r.A1 = std::min(r.A1, zr);
      if (!(ratio > 0.0)) flag(x, "V - lambda not positive right of X");
      if (!(zr > 0.0)) flag(x, "-i zeta not positive right of X");
    }
  }
  const double xt = X * (1.0 - 1e-7);
  r.taylor_ratio = (lam - V(xt)) / (lin * (X - xt));
  r.origin_ratio = (lam - V(0.0)) / (lin * X);
  frame.a1 = r.a1;
  frame.a2 = r.a2;
  frame.A1 = r.A1;
  frame.A2 = r.A2;
  return r;
}

std::vector<LangerRow> langer_check(const Potential& V, const std::vector<int>& ns, int points_per_wavelength) {
  std::vector<LangerRow> rows;
  for (int n : ns) {
    const double est = weyl_estimate(V.spec(), n) + std::max(0.0, V(0.0));
    const Grid grid = grid_for_energy(V, 1.1 * est, points_per_wavelength);
    const Eigenpair pair = solve_eigenpair_extrapolated(V, grid, n);
    TurningPointFrame frame = make_frame(V, grid, n, pair.lambda);
    const LangerApprox approx = langer_eigenfunction(frame, V, grid, pair.h);
    LangerRow row;
    row.n = n;
    row.lambda = pair.lambda;
    row.X = frame.X;
    row.err_l2 = approx.err_l2;
    row.err_sup = approx.err_sup;
    row.Cn_scaled = approx.Cn_scaled;
    row.imag_residue = approx.imag_residue;
    row.h_sup = pair.h.cwiseAbs().maxCoeff();
    row.bounds = verify_turning_bounds(frame, V);
    rows.push_back(row);
  }
  return rows;
}

double error_law_slope(const std::vector<LangerRow>& rows) {
  if (rows.size() < 2) throw Error(ErrorCode::DegenerateFit, "error_law_slope: need at least two rows");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    const double lx = std::log(r.X);
    const double ly = std::log(r.err_l2);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(rows.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_langer_csv(std::ostream& os, const std::vector<LangerRow>& rows) {
  os << "n,X_n,e_n,a1,a2,A1,A2,lambda,e_sup,Cn_scaled\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.n << ',' << r.X << ',' << r.err_l2 << ',' << r.bounds.a1 << ',' << r.bounds.a2 << ',' << r.bounds.A1
       << ',' << r.bounds.A2 << ',' << r.lambda << ',' << r.err_sup << ',' << r.Cn_scaled << '\n';
  }
}

}  // namespace kamred
