#include "kamred/homological.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kamred/error.hpp"

namespace kamred {

namespace {

int linf(const Mode& l) {
  int m = 0;
  for (int c : l) m = std::max(m, std::abs(c));
  return m;
}

bool all_zero(const TorusFunction& f) {
  return std::all_of(f.coeffs.begin(), f.coeffs.end(), [](const cplx& c) { return c == cplx(0.0, 0.0); });
}

std::string mode_str(const Mode& l) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < l.size(); ++i) os << (i ? "," : "") << l[i];
  os << ']';
  return os.str();
}

}  // namespace

ScalarSolution solve_scalar(const HomologicalProblem& pb) {
  const FourierLattice& lat = pb.b.lattice;
  if (static_cast<int>(pb.omega.size()) != lat.n_freq()) {
    throw Error(ErrorCode::DimensionMismatch, "solve_scalar: omega does not match the torus dimension");
  }
  const bool variable = !pb.E2h.coeffs.empty() && !all_zero(pb.E2h);
  if (variable && pb.E2h.lattice.n_freq() != lat.n_freq()) {
    throw Error(ErrorCode::DimensionMismatch, "solve_scalar: coefficient and rhs live on different tori");
  }
  const int M = lat.size();

  ScalarSolution out;
  out.chi = TorusFunction::zero(lat.n_freq(), lat.K());
  out.min_divisor = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd div(M);
  for (int a = 0; a < M; ++a) {
    div(a) = lat.dot(a, pb.omega) + pb.E1;
    const bool needed = variable || pb.b.coeffs[a] != cplx(0.0, 0.0);
    if (!needed) continue;
    const double d = std::abs(div(a).real());
    if (d < out.min_divisor) {
      out.min_divisor = d;
      out.min_divisor_mode = lat.mode(a);
    }
  }
  if (out.min_divisor < pb.divisor_floor) {
    throw Error(ErrorCode::ResonantDivisor, "divisor |<l,omega> + E1| = " + std::to_string(out.min_divisor) +
                                                " below floor at l=" + mode_str(out.min_divisor_mode));
  }

  if (!variable) {
    for (int a = 0; a < M; ++a) {
      if (pb.b.coeffs[a] != cplx(0.0, 0.0)) out.chi.coeffs[a] = pb.b.coeffs[a] / div(a);
    }
    return out;
  }

  CMat G = div.asDiagonal();
  const FourierLattice& clat = pb.E2h.lattice;
  Mode diff(lat.n_freq());
  for (int a = 0; a < M; ++a) {
    for (int c = 0; c < M; ++c) {
      for (int i = 0; i < lat.n_freq(); ++i) diff[i] = lat.mode(a)[i] - lat.mode(c)[i];
      const int e = clat.index(diff);
      if (e >= 0) G(a, c) += pb.E2h.coeffs[e];
    }
  }
  Eigen::PartialPivLU<CMat> lu(G);
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-14)) {
    throw Error(ErrorCode::Singular, "solve_scalar: Galerkin matrix is singular (rcond " + std::to_string(out.rcond) + ")");
  }
  Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(pb.b.coeffs.data(), M);
  Eigen::VectorXcd x = lu.solve(rhs);
  for (int a = 0; a < M; ++a) out.chi.coeffs[a] = x(a);
  return out;
}

double scalar_residual(const HomologicalProblem& pb, const TorusFunction& chi,
                       const std::vector<std::vector<double>>& phis) {
  const FourierLattice& lat = chi.lattice;
  TorusFunction lhs = TorusFunction::zero(lat.n_freq(), lat.K());
  for (int a = 0; a < lat.size(); ++a) lhs.coeffs[a] = (lat.dot(a, pb.omega) + pb.E1) * chi.coeffs[a];
  if (!pb.E2h.coeffs.empty()) {
    for (int e = 0; e < pb.E2h.lattice.size(); ++e) {
      if (pb.E2h.coeffs[e] == cplx(0.0, 0.0)) continue;
      for (int c = 0; c < lat.size(); ++c) {
        Mode l = lat.mode(c);
        for (int i = 0; i < lat.n_freq(); ++i) l[i] += pb.E2h.lattice.mode(e)[i];
        const int a = lat.index(l);
        if (a >= 0) lhs.coeffs[a] += pb.E2h.coeffs[e] * chi.coeffs[c];
      }
    }
  }
  double r = 0.0;
  for (const auto& phi : phis) r = std::max(r, std::abs(lhs.eval(phi) - pb.b.eval(phi)));
  return r;
}

QPMatrix normal_form_matrix(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus, int n_freq,
                            int K) {
  const int N = static_cast<int>(lambdas.size());
  QPMatrix A(n_freq, K, N);
  const FourierLattice& lat = A.lattice();
  for (int i = 0; i < N; ++i) A.block(lat.zero())(i, i) = lambdas[i];
  for (int i = 0; i < static_cast<int>(mus.size()); ++i) {
    const auto& mu = mus[i];
    for (int e = 0; e < mu.lattice.size(); ++e) {
      if (mu.coeffs[e] == cplx(0.0, 0.0)) continue;
      const int a = lat.index(mu.lattice.mode(e));
      if (a < 0) throw Error(ErrorCode::DimensionMismatch, "normal form: mu has modes beyond the cutoff");
      A.block(a)(i, i) += mu.coeffs[e];
    }
  }
  return A;
}

QPMatrix off_diagonal(const QPMatrix& P) {
  QPMatrix R = P;
  for (int k = 0; k < R.lattice().size(); ++k) R.block(k).diagonal().setZero();
  return R;
}

QPMatrix generator_residual(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus,
                            const QPMatrix& P, const QPMatrix& B, const std::vector<double>& omega) {
  const QPMatrix A = normal_form_matrix(lambdas, mus, P.n_freq(), P.K());
  QPMatrix R = qp_commutator(A, B);
  R -= cplx(0.0, 1.0) * B.time_derivative(omega);
  R += off_diagonal(P);
  return R;
}

GeneratorResult solve_generator(const std::vector<double>& lambdas, const std::vector<TorusFunction>& mus,
                                const QPMatrix& P, const std::vector<double>& omega, const GeneratorOptions& opts) {
  const int N = P.N();
  if (static_cast<int>(lambdas.size()) != N || static_cast<int>(mus.size()) != N) {
    throw Error(ErrorCode::DimensionMismatch, "solve_generator: normal form and perturbation sizes differ");
  }
  for (int i = 1; i < N; ++i) {
    for (int j = 0; j < i; ++j) {
      if (lambdas[i] == lambdas[j]) throw Error(ErrorCode::Validation, "solve_generator: eigenvalues must be distinct");
    }
  }
  const FourierLattice& lat = P.lattice();
  GeneratorResult out;
  out.B = QPMatrix(P.n_freq(), P.K(), N);
  out.min_divisor = std::numeric_limits<double>::infinity();
  out.order_C0 = std::numeric_limits<double>::infinity();
  std::vector<Resonance> resonant;

  HomologicalProblem pb;
  pb.omega = omega;
  pb.divisor_floor = 0.0;  // floor applied here so every resonance is collected
  pb.b = TorusFunction::zero(P.n_freq(), P.K());
  pb.E2h = TorusFunction::zero(P.n_freq(), P.K());
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      bool any = false;
      for (int a = 0; a < lat.size(); ++a) {
        const bool keep = opts.mode_cutoff < 0 || linf(lat.mode(a)) <= opts.mode_cutoff;
        pb.b.coeffs[a] = keep ? -P.block(a)(i, j) : cplx(0.0, 0.0);
        any = any || pb.b.coeffs[a] != cplx(0.0, 0.0);
      }
      std::fill(pb.E2h.coeffs.begin(), pb.E2h.coeffs.end(), cplx(0.0, 0.0));
      for (int e = 0; e < mus[i].lattice.size(); ++e) {
        const int a = lat.index(mus[i].lattice.mode(e));
        if (a >= 0) pb.E2h.coeffs[a] += mus[i].coeffs[e];
      }
      for (int e = 0; e < mus[j].lattice.size(); ++e) {
        const int a = lat.index(mus[j].lattice.mode(e));
        if (a >= 0) pb.E2h.coeffs[a] -= mus[j].coeffs[e];
      }
      pb.E1 = lambdas[i] - lambdas[j];
      if (opts.theta > 0.0) {
        const double E2 = pb.E2h.strip_norm(opts.s) + 1.0;
        out.order_C0 = std::min(out.order_C0, std::pow(std::abs(pb.E1), opts.theta) / E2);
      }
      if (!any) continue;

      const bool variable = !all_zero(pb.E2h);
      for (int a = 0; a < lat.size(); ++a) {
        if (!variable && pb.b.coeffs[a] == cplx(0.0, 0.0)) continue;
        const double d = std::abs(lat.dot(a, omega) + pb.E1);
        if (d < out.min_divisor) {
          out.min_divisor = d;
          out.min_divisor_at = Resonance{i + 1, j + 1, lat.mode(a), d};
        }
        if (d < opts.divisor_floor) resonant.push_back(Resonance{i + 1, j + 1, lat.mode(a), d});
      }
      if (!resonant.empty()) continue;

      const ScalarSolution sol = solve_scalar(pb);
      out.worst_rcond = std::min(out.worst_rcond, sol.rcond);
      if (sol.min_divisor < opts.warn_divisor) ++out.near_floor;
      for (int a = 0; a < lat.size(); ++a) out.B.block(a)(i, j) = sol.chi.coeffs[a];
    }
  }
  if (!resonant.empty()) {
    std::ostringstream os;
    os << resonant.size() << " resonant divisors, first (i,j,l)=(" << resonant[0].i << "," << resonant[0].j << ","
       << mode_str(resonant[0].l) << ") with |divisor|=" << resonant[0].divisor;
    throw ResonanceError(std::move(resonant), os.str());
  }
  if (!std::isfinite(out.order_C0)) out.order_C0 = 0.0;

  const QPMatrix adj = out.B.adjoint();
  QPMatrix sym = out.B + adj;
  out.projection_residual = 0.5 * sym.max_abs();
  out.B -= adj;
  out.B *= cplx(0.5, 0.0);
  return out;
}

}  // namespace kamred
