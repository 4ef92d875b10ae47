#include "kamred/dynamics.hpp"

#include <cmath>
#include <ostream>

#include "kamred/error.hpp"

namespace kamred {

double sobolev_norm(const Eigen::VectorXcd& x, double s) {
  double a = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) a += std::pow(j + 1.0, s) * std::norm(x(j));
  return std::sqrt(a);
}

namespace {

struct RotatingRhs {
  Eigen::VectorXd lambda;
  std::vector<CMat> blocks;
  std::vector<double> freq;  // <l, omega> per block

  // dz/dt = -i e^{i Lambda t} P(omega t) e^{-i Lambda t} z
  Eigen::VectorXcd operator()(double t, const Eigen::VectorXcd& z) const {
    const Eigen::Index N = z.size();
    Eigen::VectorXcd ph(N);
    for (Eigen::Index j = 0; j < N; ++j) ph(j) = std::polar(1.0, -lambda(j) * t);
    const Eigen::VectorXcd v = ph.cwiseProduct(z);
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(N);
    for (size_t b = 0; b < blocks.size(); ++b) w.noalias() += std::polar(1.0, freq[b] * t) * (blocks[b] * v);
    return cplx(0.0, -1.0) * ph.conjugate().cwiseProduct(w);
  }
};

void record(Trajectory& tr, double t, const Eigen::VectorXcd& x) {
  tr.times.push_back(t);
  tr.states.push_back(x);
  for (size_t k = 0; k < tr.sobolev_s.size(); ++k) tr.norms[k].push_back(sobolev_norm(x, tr.sobolev_s[k]));
}

}  // namespace

Trajectory evolve_direct(const std::vector<double>& lambdas, const QPMatrix& P, const std::vector<double>& omega,
                         const Eigen::VectorXcd& x0, double T, double dt, const DirectOptions& opts, double t0) {
  const int N = P.N();
  if (static_cast<int>(lambdas.size()) != N || x0.size() != N) {
    throw Error(ErrorCode::DimensionMismatch, "evolve_direct: sizes of lambda, P and x0 differ");
  }
  if (static_cast<int>(omega.size()) != P.n_freq()) {
    throw Error(ErrorCode::DimensionMismatch, "evolve_direct: omega does not match the torus dimension");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::Validation, "evolve_direct: dt must be positive");
  if (opts.samples < 1) throw Error(ErrorCode::Validation, "evolve_direct: need at least one sample");

  RotatingRhs f;
  f.lambda = Eigen::Map<const Eigen::VectorXd>(lambdas.data(), N);
  const FourierLattice& lat = P.lattice();
  for (int a = 0; a < lat.size(); ++a) {
    if (P.is_zero_block(a)) continue;
    f.blocks.push_back(P.block(a));
    f.freq.push_back(lat.dot(a, omega));
  }

  const double n0 = x0.norm();
  const long steps_per_sample0 = std::max(1L, static_cast<long>(std::ceil(std::abs(T) / opts.samples / dt)));
  for (int attempt = 0; attempt <= opts.max_halvings; ++attempt) {
    const long per = steps_per_sample0 << attempt;
    const double h = T / (static_cast<double>(per) * opts.samples);
    Trajectory tr;
    tr.sobolev_s = opts.sobolev_s;
    tr.norms.assign(opts.sobolev_s.size(), {});
    tr.dt_used = std::abs(h);
    record(tr, t0, x0);
    Eigen::VectorXcd z(N);
    for (int j = 0; j < N; ++j) z(j) = std::polar(1.0, lambdas[j] * t0) * x0(j);
    for (int s = 1; s <= opts.samples; ++s) {
      for (long k = 0; k < per; ++k) {
        const double t = t0 + h * (static_cast<double>(s - 1) * per + k);
        const Eigen::VectorXcd k1 = f(t, z);
        const Eigen::VectorXcd k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
        const Eigen::VectorXcd k4 = f(t + h, z + h * k3);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      const double t = t0 + T * s / opts.samples;
      Eigen::VectorXcd x(N);
      for (int j = 0; j < N; ++j) x(j) = std::polar(1.0, -lambdas[j] * t) * z(j);
      record(tr, t, x);
      tr.norm_drift = std::max(tr.norm_drift, std::abs(x.norm() - n0));
    }
    if (tr.norm_drift <= opts.drift_tol) return tr;
    if (attempt == opts.max_halvings) {
      throw Error(ErrorCode::StepSize, "evolve_direct: norm drift " + std::to_string(tr.norm_drift) +
                                           " exceeds tolerance; try dt <= " + std::to_string(0.5 * std::abs(h)));
    }
  }
  return {};
}

Trajectory evolve_reduced(const std::vector<double>& lambdas_inf, const std::vector<TorusFunction>& mus_inf,
                          const std::vector<double>& omega, const Eigen::VectorXcd& y0,
                          const std::vector<double>& times, const std::vector<double>& sobolev_s) {
  const Eigen::Index N = y0.size();
  if (static_cast<Eigen::Index>(lambdas_inf.size()) != N || static_cast<Eigen::Index>(mus_inf.size()) != N) {
    throw Error(ErrorCode::DimensionMismatch, "evolve_reduced: sizes differ");
  }
  for (const auto& mu : mus_inf) {
    for (int a = 0; a < mu.lattice.size(); ++a) {
      if (mu.coeffs[a] == cplx(0.0, 0.0) || a == mu.lattice.zero()) continue;
      if (std::abs(mu.lattice.dot(a, omega)) < 1e-14) {
        throw Error(ErrorCode::ResonantPhase, "evolve_reduced: <l,omega> = 0 for a nonzero mode of mu");
      }
    }
  }
  Trajectory tr;
  tr.sobolev_s = sobolev_s;
  tr.norms.assign(sobolev_s.size(), {});
  for (double t : times) {
    Eigen::VectorXcd y(N);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto& mu = mus_inf[j];
      cplx Phi(0.0, 0.0);
      for (int a = 0; a < mu.lattice.size(); ++a) {
        if (a == mu.lattice.zero() || mu.coeffs[a] == cplx(0.0, 0.0)) continue;
        const double w = mu.lattice.dot(a, omega);
        Phi += mu.coeffs[a] * (std::exp(cplx(0.0, w * t)) - 1.0) / cplx(0.0, w);
      }
      y(j) = std::exp(cplx(0.0, -lambdas_inf[j] * t) - cplx(0.0, 1.0) * Phi) * y0(j);
    }
    record(tr, t, y);
  }
  return tr;
}

Eigen::VectorXcd reduced_initial(const QPMatrix& U, const Eigen::VectorXcd& x0) {
  const CMat U0 = U.eval(std::vector<double>(U.n_freq(), 0.0));
  return U0.partialPivLu().solve(x0);
}

FlowComparison compare_flows(const Trajectory& direct, const Trajectory& reduced, const QPMatrix& U,
                             const std::vector<double>& omega) {
  if (direct.times.size() != reduced.times.size()) {
    throw Error(ErrorCode::GridMismatch, "compare_flows: trajectories have different sample counts");
  }
  for (size_t k = 0; k < direct.times.size(); ++k) {
    if (std::abs(direct.times[k] - reduced.times[k]) > 1e-12 * (1.0 + std::abs(direct.times[k]))) {
      throw Error(ErrorCode::GridMismatch, "compare_flows: sample times differ");
    }
  }
  FlowComparison cmp;
  std::vector<double> phi(omega.size());
  for (size_t k = 0; k < direct.times.size(); ++k) {
    for (size_t i = 0; i < omega.size(); ++i) phi[i] = omega[i] * direct.times[k];
    const double d = (direct.states[k] - U.eval(phi) * reduced.states[k]).norm();
    cmp.deviation.push_back(d);
    cmp.max_deviation = std::max(cmp.max_deviation, d);
  }
  cmp.sobolev_s = direct.sobolev_s;
  for (size_t s = 0; s < direct.sobolev_s.size(); ++s) {
    double sup = 0.0;
    for (double v : direct.norms[s]) sup = std::max(sup, v);
    cmp.sobolev_sup.push_back(direct.norms[s].empty() ? 0.0 : sup / direct.norms[s][0]);
  }
  return cmp;
}

void write_flow_csv(std::ostream& os, const Trajectory& direct, const FlowComparison& cmp) {
  os << "t,deviation";
  for (double s : direct.sobolev_s) os << ",norm_s" << s;
  os << '\n';
  os.precision(17);
  for (size_t k = 0; k < direct.times.size(); ++k) {
    os << direct.times[k] << ',' << (k < cmp.deviation.size() ? cmp.deviation[k] : 0.0);
    for (size_t s = 0; s < direct.sobolev_s.size(); ++s) os << ',' << direct.norms[s][k];
    os << '\n';
  }
}

}  // namespace kamred
