#include "kamred/kam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kamred/error.hpp"
#include "kamred/oscint.hpp"

namespace kamred {

namespace {

int linf(const Mode& l) {
  int m = 0;
  for (int c : l) m = std::max(m, std::abs(c));
  return m;
}

int l1(const Mode& l) {
  int m = 0;
  for (int c : l) m += std::abs(c);
  return m;
}

// Every k in Z^n with |k|_inf <= K, mixed-radix order.
std::vector<Mode> box_modes(int n, int K) {
  const FourierLattice lat(n, K);
  std::vector<Mode> out;
  out.reserve(lat.size());
  for (int a = 0; a < lat.size(); ++a) out.push_back(lat.mode(a));
  return out;
}

QPMatrix scaled(QPMatrix Q, double a) {
  Q *= cplx(a, 0.0);
  return Q;
}

}  // namespace

PerturbationSpec default_perturbation(double mu, double eps, int n_freq) {
  PerturbationSpec W;
  W.mu = mu;
  W.eps = eps;
  TrigTerm t;
  t.kx = {1};
  t.l = Mode(n_freq, 0);
  t.l[0] = 1;
  W.terms.push_back(t);
  return W;
}

double diophantine_margin(const std::vector<double>& nu, double tau1, int cutoff) {
  double best = std::numeric_limits<double>::infinity();
  for (const Mode& k : box_modes(static_cast<int>(nu.size()), cutoff)) {
    const int a = l1(k);
    if (a == 0 || a > cutoff) continue;
    double dot = 0.0;
    for (size_t i = 0; i < nu.size(); ++i) dot += k[i] * nu[i];
    best = std::min(best, std::abs(dot) * std::pow(a, tau1));
  }
  return best;
}

double class_beta(double ell, double mu) {
  const double m = std::min(1.0 / 3.0, (mu + 1.0) / (2.0 * mu + 2.0 * ell + 1.0));
  return std::max(0.0, mu / (2.0 * (ell + 1.0)) - m / (2.0 * (ell + 1.0)));
}

Problem assemble_problem(const SpectralBasis& basis, double ell, const PerturbationSpec& W, int N, int n_freq, int K) {
  if (N < 1 || N > basis.count()) {
    throw Error(ErrorCode::Validation, "assemble_problem: N=" + std::to_string(N) + " exceeds the basis size " +
                                           std::to_string(basis.count()));
  }
  Problem pb;
  pb.lambdas.assign(basis.lambdas.begin(), basis.lambdas.begin() + N);
  pb.P = QPMatrix(n_freq, K, N);
  pb.beta = class_beta(ell, W.mu);
  pb.delta = ell / (ell + 1.0);
  pb.diophantine = diophantine_margin(W.nu, static_cast<double>(W.nu.size()) + 1.0, 20);
  const WeightSpec f = WeightSpec::bracket(W.mu);

  for (const TrigTerm& t : W.terms) {
    if (!t.x_sin) {
      throw Error(ErrorCode::A3Violation, "perturbation term even in x: W(-x, phi) = -W(x, phi) is required");
    }
    if (t.kx.size() != W.nu.size()) throw Error(ErrorCode::Validation, "perturbation term: kx and nu differ in length");
    if (static_cast<int>(t.l.size()) != n_freq) {
      throw Error(ErrorCode::Validation, "perturbation term: phi-mode has the wrong dimension");
    }
    if (linf(t.l) > K) throw Error(ErrorCode::Validation, "perturbation term: phi-mode beyond the cutoff");
    double k = 0.0;
    for (size_t i = 0; i < t.kx.size(); ++i) k += t.kx[i] * W.nu[i];
    if (k == 0.0 || t.amp == 0.0) continue;

    Eigen::MatrixXd M(N, N);
    for (int i = 1; i <= N; ++i) {
      for (int j = i; j <= N; ++j) {
        M(i - 1, j - 1) = M(j - 1, i - 1) = matrix_element(f, k, i, j, basis).imag();
      }
    }
    const double a = W.eps * t.amp;
    Mode neg = t.l;
    for (auto& c : neg) c = -c;
    if (linf(t.l) == 0) {
      if (t.phi_cos) pb.P[t.l] += a * M.cast<cplx>();
      continue;
    }
    const cplx c = t.phi_cos ? cplx(0.5 * a, 0.0) : cplx(0.0, -0.5 * a);
    pb.P[t.l] += c * M.cast<cplx>();
    pb.P[neg] += std::conj(c) * M.cast<cplx>();
  }

  for (int a = 0; a < pb.P.lattice().size(); ++a) {
    if (pb.P.is_zero_block(a)) continue;
    pb.norm_beta = std::max(pb.norm_beta, norm_beta(pb.P.block(a), pb.beta));
    pb.b3_surrogate = std::max(pb.b3_surrogate, weighted_op_norm(pb.P.block(a), 0.0, -2.0 * pb.delta));
  }
  return pb;
}

double a3_exponent(int n_freq, double tau, double beta, double iota) {
  const double theta = 2.0 * beta / (iota - 1.0);
  if (!(theta < 1.0)) throw Error(ErrorCode::Validation, "a3_exponent: need 2 beta < iota - 1");
  return n_freq + tau + theta * (n_freq + tau + 2.0) / (1.0 - theta);
}

double calibrate_schedule(double eps0, double s0, double a3, int l_max) {
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw Error(ErrorCode::Validation, "schedule: eps0 must lie in (0, 1)");
  double S = 0.0;
  double log_eps = std::log(eps0);
  for (int l = 1; l <= l_max; ++l) {
    S += std::pow(std::abs(log_eps), -1.0 / a3);
    log_eps *= 4.0 / 3.0;
  }
  return std::pow(s0 / (4.0 * S), a3) / 3.0;
}

std::vector<ScheduleLevel> schedule_levels(const IterationSchedule& sc, int n_freq) {
  if (!(sc.s0 > 0.0 && sc.s0 < 1.0)) throw Error(ErrorCode::Validation, "schedule: need 0 < s0 < 1");
  if (sc.l_max < 0) throw Error(ErrorCode::Validation, "schedule: l_max must be nonnegative");
  const double a3 = a3_exponent(n_freq, sc.tau, sc.beta, sc.iota);
  const double C = sc.a3_proxy > 0.0 ? sc.a3_proxy : calibrate_schedule(sc.eps0, sc.s0, a3, std::max(1, sc.l_max));
  std::vector<ScheduleLevel> out;
  out.push_back(ScheduleLevel{0, sc.eps0, 0.0, sc.s0, 0, sc.gamma0});
  double log_eps = std::log(sc.eps0);
  for (int l = 1; l <= sc.l_max; ++l) {
    const ScheduleLevel& prev = out.back();
    ScheduleLevel L;
    L.l = l;
    L.sigma = std::pow(3.0 * C / std::abs(log_eps), 1.0 / a3);
    L.s = prev.s - 2.0 * L.sigma;
    L.K = l * sc.K_base;
    L.gamma = prev.gamma - 2.0 * prev.eps * (1.0 + std::pow(L.K, sc.tau));
    log_eps *= 4.0 / 3.0;
    L.eps = std::exp(log_eps);
    out.push_back(L);
  }
  return out;
}

KamState initial_state(const Problem& pb, const std::vector<double>& omega, double s0) {
  if (static_cast<int>(omega.size()) != pb.P.n_freq()) {
    throw Error(ErrorCode::DimensionMismatch, "omega does not match the torus dimension");
  }
  KamState st;
  st.lambdas = pb.lambdas;
  st.mus.assign(pb.P.N(), TorusFunction::zero(pb.P.n_freq(), pb.P.K()));
  st.P = pb.P;
  st.s = s0;
  st.omega = omega;
  return st;
}

KamState kam_step(const KamState& st, double sigma, const StepOptions& opts, StepReport* report) {
  StepReport rep;
  rep.norm_before = strip_norm(st.P, opts.beta, st.s);
  KamState next = st;
  next.level = st.level + 1;
  next.s = st.s - 2.0 * sigma;
  const int N = st.P.N();
  const int n = st.P.n_freq();
  const int K = st.P.K();
  const FourierLattice& lat = st.P.lattice();

  if (st.P.is_zero()) {
    next.history.push_back(QPMatrix(n, K, N));
    if (report) *report = rep;
    return next;
  }

  GeneratorOptions gopts;
  gopts.divisor_floor = opts.divisor_floor;
  gopts.mode_cutoff = opts.mode_cutoff;
  const GeneratorResult gen = solve_generator(st.lambdas, st.mus, st.P, st.omega, gopts);
  const QPMatrix& B = gen.B;
  rep.min_divisor = gen.min_divisor;
  rep.projection_residual = gen.projection_residual;
  rep.near_floor = gen.near_floor;

  // Solved part of the off-diagonal perturbation and what stays behind.
  QPMatrix R_solved = off_diagonal(st.P);
  QPMatrix R_left(n, K, N);
  if (opts.mode_cutoff >= 0) {
    for (int a = 0; a < lat.size(); ++a) {
      if (linf(lat.mode(a)) > opts.mode_cutoff) {
        R_left.block(a) = R_solved.block(a);
        R_solved.block(a).setZero();
      }
    }
  }

  // [A,B] - i dB/dt = -R_solved + res, res being the solve error.
  const QPMatrix res = generator_residual(st.lambdas, st.mus, R_solved, B, st.omega);

  QPMatrix Pn = R_left + res;
  QPMatrix termP = st.P;
  QPMatrix termS = R_solved;
  QPMatrix termR = res;
  for (int k = 1; k <= 40; ++k) {
    termP = scaled(qp_commutator(termP, B), 1.0 / k);
    termS = scaled(qp_commutator(termS, B), 1.0 / (k + 1));
    termR = scaled(qp_commutator(termR, B), 1.0 / (k + 1));
    QPMatrix add = termP - termS;
    add += termR;
    Pn += add;
    rep.lie_terms = k;
    const double a = add.max_abs();
    if (a == 0.0 || a <= 1e-18 * Pn.max_abs()) break;
  }

  for (int i = 0; i < N; ++i) {
    next.lambdas[i] = st.lambdas[i] + st.P.block(lat.zero())(i, i).real();
    rep.drift_ok = rep.drift_ok &&
                   std::abs(next.lambdas[i] - st.lambdas[i]) <= rep.norm_before * std::pow(i + 1.0, 2.0 * opts.beta) * (1 + 1e-12);
    auto& mu = next.mus[i];
    for (int a = 0; a < lat.size(); ++a) {
      if (a == lat.zero()) continue;
      const int e = mu.lattice.index(lat.mode(a));
      if (e >= 0) mu.coeffs[e] += st.P.block(a)(i, i);
    }
  }
  next.P = Pn;
  next.history.push_back(B);
  rep.hermitian_defect = Pn.hermitian_defect();
  rep.norm_after = strip_norm(Pn, opts.beta, std::max(next.s, 0.0));
  rep.contraction = rep.norm_after / (rep.norm_before * rep.norm_before);
  if (report) *report = rep;
  return next;
}

double direct_step_discrepancy(const KamState& before, const KamState& after) {
  if (after.history.empty()) throw Error(ErrorCode::Validation, "direct_step_discrepancy: no generator recorded");
  const QPMatrix& B = after.history.back();
  const int n = B.n_freq(), K = B.K(), N = B.N();
  const QPMatrix E = qp_exp(B);
  const QPMatrix Einv = qp_exp(scaled(B, -1.0));
  const QPMatrix H = normal_form_matrix(before.lambdas, before.mus, n, K) + before.P;
  QPMatrix X = qp_product(qp_product(Einv, H), E);
  X -= cplx(0.0, 1.0) * qp_product(Einv, E.time_derivative(before.omega));
  X -= normal_form_matrix(after.lambdas, after.mus, n, K);
  X -= after.P;
  (void)N;
  return X.max_abs();
}

QPMatrix compose_exponentials(const std::vector<QPMatrix>& generators, int n_freq, int K, int N) {
  QPMatrix U = QPMatrix::identity(n_freq, K, N);
  for (const QPMatrix& B : generators) {
    if (B.is_zero()) continue;
    U = qp_product(U, qp_exp(B));
  }
  return U;
}

double reducibility_residual(const QPMatrix& U, const std::vector<double>& lambdas_inf,
                             const std::vector<TorusFunction>& mus_inf, const Problem& pb,
                             const std::vector<double>& omega, const std::vector<std::vector<double>>& phis) {
  const int n = U.n_freq(), K = U.K(), N = U.N();
  const QPMatrix Ainf = normal_form_matrix(lambdas_inf, mus_inf, n, K);
  const QPMatrix H0 = normal_form_matrix(pb.lambdas, std::vector<TorusFunction>(N, TorusFunction::zero(n, K)), n, K) + pb.P;
  QPMatrix R = qp_product(U, Ainf);
  R += cplx(0.0, 1.0) * U.time_derivative(omega);
  R -= qp_product(H0, U);
  double r = 0.0;
  for (const auto& phi : phis) r = std::max(r, R.eval(phi).cwiseAbs().maxCoeff());
  return r;
}

IterationResult run_iteration(const Problem& pb, const std::vector<double>& omega, const IterationSchedule& sched) {
  const int n = pb.P.n_freq(), K = pb.P.K(), N = pb.P.N();
  IterationResult out;
  KamState st = initial_state(pb, omega, sched.s0);
  const double norm0 = strip_norm(pb.P, sched.beta, sched.s0);
  out.a3 = a3_exponent(n, sched.tau, sched.beta, sched.iota);

  auto finish = [&](const std::string& why) {
    out.stop_reason = why;
    out.final = st;
    out.lambdas_inf = st.lambdas;
    out.mus_inf = st.mus;
    out.U = compose_exponentials(st.history, n, K, N);
    const auto phis = torus_samples(n, 16);
    out.unitarity = unitarity_defect(out.U, phis);
    for (const auto& phi : phis) {
      const CMat D = out.U.eval(phi) - CMat::Identity(N, N);
      out.U_deviation = std::max(out.U_deviation, weighted_op_norm(D, 0.0, 0.0));
    }
    return out;
  };

  LevelReport lv0;
  lv0.norm_P = norm0;
  lv0.s = sched.s0;
  lv0.eps_sched = norm0;
  lv0.min_divisor = std::numeric_limits<double>::infinity();
  out.levels.push_back(lv0);
  if (norm0 == 0.0) return finish("zero-perturbation");

  // First Melnikov screen on omega.
  for (const Mode& k : box_modes(n, sched.K_screen)) {
    const int a = l1(k);
    if (a == 0) continue;
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += k[i] * omega[i];
    if (std::abs(dot) < sched.gamma0 / std::pow(a, sched.tau)) {
      Resonance r{0, 0, k, std::abs(dot)};
      throw ResonanceError({r}, "omega fails the first Melnikov condition at k with |<k,omega>| = " +
                                    std::to_string(std::abs(dot)));
    }
  }

  IterationSchedule sc = sched;
  sc.eps0 = std::min(norm0, 0.5);
  if (norm0 >= 1.0) out.flags.push_back("initial norm >= 1: schedule started from 0.5");
  const auto levels = schedule_levels(sc, n);
  out.schedule_C = sched.a3_proxy > 0.0 ? sched.a3_proxy : calibrate_schedule(sc.eps0, sc.s0, out.a3, std::max(1, sc.l_max));
  bool gamma_flagged = false;

  StepOptions opts;
  opts.beta = sched.beta;
  int increases = 0;
  double norm = norm0;
  for (int l = 0;; ++l) {
    if (norm < sched.stop_tol) return finish("converged");
    if (l >= sched.l_max) return finish("l_max");
    if (st.s <= 0.5 * sched.s0 * (1.0 + 1e-12)) return finish("strip-exhausted");
    const ScheduleLevel& L = levels[l + 1];
    opts.mode_cutoff = L.K < K ? L.K : -1;
    StepReport rep;
    st = kam_step(st, L.sigma, opts, &rep);

    LevelReport lv;
    lv.l = l + 1;
    lv.eps_sched = L.eps;
    lv.norm_P = rep.norm_after;
    lv.s = st.s;
    lv.K = L.K;
    lv.min_divisor = rep.min_divisor;
    lv.contraction = rep.contraction;
    lv.hermitian_defect = rep.hermitian_defect;
    lv.drift_ok = rep.drift_ok;
    out.levels.push_back(lv);

    if (L.gamma <= 0.0 && !gamma_flagged) {
      out.flags.push_back("schedule gamma_l <= 0 from level " + std::to_string(l + 1));
      gamma_flagged = true;
    }
    if (rep.norm_after > L.eps) out.flags.push_back("norm above schedule at level " + std::to_string(l + 1));
    if (!rep.drift_ok) out.flags.push_back("eigenvalue drift bound violated at level " + std::to_string(l + 1));
    if (rep.near_floor > 0) out.flags.push_back("near-floor divisors at level " + std::to_string(l + 1));
    if (rep.norm_after > rep.norm_before) {
      out.flags.push_back("norm increased at level " + std::to_string(l + 1));
      if (++increases >= 2) {
        throw Error(ErrorCode::Divergence, "perturbation norm increased at two consecutive levels (last " +
                                               std::to_string(rep.norm_after) + "); eps0 too large");
      }
    } else {
      increases = 0;
    }
    norm = rep.norm_after;
  }
}

namespace {

std::vector<Interval> raw_intervals(const std::vector<double>& lam, double gamma, double tau, int K_max, double iota,
                                    double lo, double hi, bool* everything) {
  std::vector<Interval> v;
  *everything = false;
  for (int k = 1; k <= K_max; ++k) {
    const double w = gamma / std::pow(k, tau + 1.0);
    if (w > 0.0) v.push_back({-w, w});
  }
  const int N = static_cast<int>(lam.size());
  for (int i = 1; i <= N; ++i) {
    for (int j = i + 1; j <= N; ++j) {
      const double d = lam[i - 1] - lam[j - 1];
      const double g = gamma * std::abs(std::pow(i, iota) - std::pow(j, iota));
      if (std::abs(d) < g) *everything = true;
      for (int k = -K_max; k <= K_max; ++k) {
        if (k == 0) continue;
        const double half = g / (1.0 + std::pow(std::abs(k), tau)) / std::abs(k);
        const double c = -d / k;
        if (half > 0.0 && c + half > lo && c - half < hi) v.push_back({c - half, c + half});
      }
    }
  }
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  std::vector<Interval> merged;
  for (const Interval& I : v) {
    if (!merged.empty() && I.lo < merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, I.hi);
    } else {
      merged.push_back(I);
    }
  }
  return merged;
}

}  // namespace

std::vector<Interval> excluded_intervals(const std::vector<double>& lambdas, double gamma, double tau, int K_max,
                                         double iota, double lo, double hi) {
  bool everything = false;
  const auto raw = raw_intervals(lambdas, gamma, tau, K_max, iota, lo, hi, &everything);
  if (everything) return {{lo, hi}};
  std::vector<Interval> out;
  for (const Interval& I : raw) {
    const double a = std::max(I.lo, lo), b = std::min(I.hi, hi);
    if (a < b) out.push_back({a, b});
  }
  return out;
}

std::vector<std::vector<double>> omega_grid(int n_freq, int per_axis) {
  if (per_axis < 2) throw Error(ErrorCode::Validation, "omega_grid: need at least 2 points per axis");
  std::vector<std::vector<double>> out;
  long total = 1;
  for (int i = 0; i < n_freq; ++i) total *= per_axis;
  out.reserve(total);
  for (long idx = 0; idx < total; ++idx) {
    std::vector<double> w(n_freq);
    long r = idx;
    for (int i = 0; i < n_freq; ++i) {
      w[i] = static_cast<double>(r % per_axis) / (per_axis - 1);
      r /= per_axis;
    }
    out.push_back(std::move(w));
  }
  return out;
}

FilterResult resonance_filter(const std::vector<double>& lambdas, const std::vector<std::vector<double>>& grid,
                              double gamma, double tau, int K_max, double iota) {
  if (grid.empty()) throw Error(ErrorCode::Validation, "resonance_filter: empty omega grid");
  const int n = static_cast<int>(grid[0].size());
  if (!(iota > 1.0) || !(tau > n + 2.0 / (iota - 1.0))) {
    throw Error(ErrorCode::Validation, "resonance_filter: need tau > n + 2/(iota - 1)");
  }
  if (gamma < 0.0) throw Error(ErrorCode::Validation, "resonance_filter: gamma must be nonnegative");
  FilterResult out;
  out.excluded.assign(grid.size(), false);

  if (n == 1) {
    double lo = grid[0][0], hi = grid[0][0];
    for (const auto& w : grid) {
      lo = std::min(lo, w[0]);
      hi = std::max(hi, w[0]);
    }
    bool everything = false;
    const auto raw = raw_intervals(lambdas, gamma, tau, K_max, iota, lo, hi, &everything);
    for (size_t p = 0; p < grid.size(); ++p) {
      const double w = grid[p][0];
      auto it = std::upper_bound(raw.begin(), raw.end(), w, [](double x, const Interval& I) { return x < I.hi; });
      // first interval with hi > w
      out.excluded[p] = everything || (it != raw.end() && it->lo < w);
    }
    double meas = 0.0;
    for (const Interval& I : excluded_intervals(lambdas, gamma, tau, K_max, iota, lo, hi)) meas += I.hi - I.lo;
    out.excluded_measure = hi > lo ? meas / (hi - lo) : 0.0;
  } else {
    const auto ks = box_modes(n, K_max);
    const int N = static_cast<int>(lambdas.size());
    for (size_t p = 0; p < grid.size(); ++p) {
      const auto& w = grid[p];
      bool bad = false;
      for (const Mode& k : ks) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += k[i] * w[i];
        const double a = l1(k);
        if (a > 0 && std::abs(dot) < gamma / std::pow(a, tau)) bad = true;
        for (int i = 1; i <= N && !bad; ++i) {
          for (int j = i + 1; j <= N && !bad; ++j) {
            const double g = gamma * std::abs(std::pow(i, iota) - std::pow(j, iota)) / (1.0 + std::pow(a, tau));
            if (std::abs(lambdas[i - 1] - lambdas[j - 1] + dot) < g) bad = true;
          }
        }
        if (bad) break;
      }
      out.excluded[p] = bad;
    }
  }

  for (size_t p = 0; p < grid.size(); ++p) {
    if (!out.excluded[p]) out.accepted.push_back(static_cast<int>(p));
  }
  out.excluded_fraction = 1.0 - static_cast<double>(out.accepted.size()) / grid.size();
  if (out.accepted.empty()) {
    throw Error(ErrorCode::OverExclusion, "every omega on the grid is excluded; try a smaller gamma");
  }
  return out;
}

}  // namespace kamred
