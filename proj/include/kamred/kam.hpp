#pragma once

#include <string>
#include <vector>

#include "kamred/homological.hpp"
#include "kamred/matclass.hpp"
#include "kamred/spectrum.hpp"

namespace kamred {

/// One term amp * sin/cos(<kx, nu x>) * cos/sin(<l, phi>) of the perturbation W.
struct TrigTerm {
  double amp = 1.0;
  std::vector<int> kx;  // multiples of nu, length d
  bool x_sin = true;    // cos in x breaks the oddness assumption
  Mode l;               // length n
  bool phi_cos = true;
};

struct PerturbationSpec {
  std::vector<TrigTerm> terms;
  std::vector<double> nu{1.0};
  double mu = 1.0;   // weight <x>^mu
  double eps = 1e-3;
};

/// sin(nu x) cos(phi_1): the default family.
PerturbationSpec default_perturbation(double mu, double eps, int n_freq = 1);

/// min over 0 < |k|_1 <= cutoff of |<k, nu>| |k|^tau1, a lower estimate of
/// the Diophantine constant of nu.
double diophantine_margin(const std::vector<double>& nu, double tau1, int cutoff);

/// Off-diagonal decay exponent: mu/(2(ell+1)) - min(1/3, (mu+1)/(2mu+2ell+1))/(2(ell+1)), floored at 0.
double class_beta(double ell, double mu);
/// Growth exponent of the spectrum, 2 ell/(ell+1).
inline double spectral_iota(double ell) { return 2.0 * ell / (ell + 1.0); }

struct Problem {
  std::vector<double> lambdas;  // A0 = diag(lambda_1..lambda_N)
  QPMatrix P;                   // eps * P0
  double beta = 0.0;
  double norm_beta = 0.0;       // sup_l |P^(l)|_beta
  double b3_surrogate = 0.0;    // max_l ||P^(l)|| as l^2_0 -> l^2_{-2 delta}
  double delta = 0.0;
  double diophantine = 0.0;
};

/// P_ij(phi) = eps int <x>^mu W(nu x, phi) h_i h_j dx mode by mode, i, j <= N.
/// A3Violation for a term even in x; Validation if N exceeds the basis or a
/// term's phi-mode exceeds K.
Problem assemble_problem(const SpectralBasis& basis, double ell, const PerturbationSpec& W, int N, int n_freq, int K);

struct IterationSchedule {
  double eps0 = 1e-3;
  double s0 = 0.5;
  double gamma0 = 1e-3;
  int K_base = 8;        // generator solves modes |l| <= l*K_base at level l
  double tau = 8.0;
  double a3_proxy = 0.0; // constant in sigma_l = (3C/|ln eps_{l-1}|)^{1/a3}; 0 = calibrate
  int l_max = 8;
  double stop_tol = 1e-10;
  double beta = 5.0 / 42.0;
  double iota = 4.0 / 3.0;
  int K_screen = 30;
};

/// a3 = n + tau + theta (n + tau + 2)/(1 - theta), theta = 2 beta/(iota - 1).
double a3_exponent(int n_freq, double tau, double beta, double iota);

struct ScheduleLevel {
  int l = 0;
  double eps = 0.0;
  double sigma = 0.0;
  double s = 0.0;
  int K = 0;
  double gamma = 0.0;
};

/// C with sum_{l=1}^{l_max} 2 sigma_l = s0/2.
double calibrate_schedule(double eps0, double s0, double a3, int l_max);
/// Levels 0..l_max of the recursions; level 0 holds the initial values.
std::vector<ScheduleLevel> schedule_levels(const IterationSchedule& sched, int n_freq);

struct KamState {
  int level = 0;
  std::vector<double> lambdas;
  std::vector<TorusFunction> mus;  // zero mean
  QPMatrix P;
  double s = 0.0;
  std::vector<double> omega;
  std::vector<QPMatrix> history;   // generators B^1..B^level
};

KamState initial_state(const Problem& pb, const std::vector<double>& omega, double s0);

struct StepReport {
  double norm_before = 0.0;
  double norm_after = 0.0;
  double contraction = 0.0;    // norm_after / norm_before^2
  double min_divisor = 0.0;
  double hermitian_defect = 0.0;
  double projection_residual = 0.0;
  int lie_terms = 0;
  bool drift_ok = true;        // |lambda+ - lambda| <= norm_before i^{2 beta}
  int near_floor = 0;
};

struct StepOptions {
  double beta = 0.0;
  int mode_cutoff = -1;
  double divisor_floor = 1e-10;
};

/// One conjugation by e^B. P+ from the Lie series of e^{-B}(A+P)e^{B} - i e^{-B} d/dt e^{B} - A+
/// with the homological equation substituted, so nothing of size |A| is cancelled.
KamState kam_step(const KamState& state, double sigma, const StepOptions& opts, StepReport* report = nullptr);

/// e^{-B}(A+P)e^{B} - i e^{-B} d/dt e^{B} - A+ - P+ evaluated directly (one-step cross-check).
double direct_step_discrepancy(const KamState& before, const KamState& after);

struct LevelReport {
  int l = 0;
  double eps_sched = 0.0;
  double norm_P = 0.0;
  double s = 0.0;
  int K = 0;
  double min_divisor = 0.0;
  double contraction = 0.0;
  double hermitian_defect = 0.0;
  bool drift_ok = true;
};

struct IterationResult {
  std::vector<LevelReport> levels;
  KamState final;
  std::vector<double> lambdas_inf;
  std::vector<TorusFunction> mus_inf;
  QPMatrix U;
  double U_deviation = 0.0;   // max over sampled phi of ||U - I|| on l^2_0
  double unitarity = 0.0;
  std::string stop_reason;
  std::vector<std::string> flags;
  double a3 = 0.0;
  double schedule_C = 0.0;
};

/// Iterates kam_step from P0 until the norm drops below stop_tol, s_l reaches
/// s0/2, or l_max. Resonance at level 0 (first Melnikov up to K_screen) and
/// divergence (two consecutive increases) abort with an error.
IterationResult run_iteration(const Problem& pb, const std::vector<double>& omega, const IterationSchedule& sched);

/// U A_inf + i dU/dt - (A0 + P0) U, max entry over the phi samples.
double reducibility_residual(const QPMatrix& U, const std::vector<double>& lambdas_inf,
                             const std::vector<TorusFunction>& mus_inf, const Problem& pb,
                             const std::vector<double>& omega, const std::vector<std::vector<double>>& phis);

/// Product of the exponentials of the given generators.
QPMatrix compose_exponentials(const std::vector<QPMatrix>& generators, int n_freq, int K, int N);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// n = 1: union of the open omega-intervals in [lo, hi] where either
/// |k omega| < gamma/|k|^tau or |lambda_i - lambda_j + k omega| < gamma |i^iota - j^iota|/(1 + |k|^tau),
/// 0 < |k| <= K_max (k = 0 included for the pair condition). Sorted, merged.
std::vector<Interval> excluded_intervals(const std::vector<double>& lambdas, double gamma, double tau, int K_max,
                                         double iota, double lo = 0.0, double hi = 1.0);

struct FilterResult {
  std::vector<int> accepted;       // indices into the omega grid
  std::vector<bool> excluded;
  double excluded_fraction = 0.0;  // over the grid
  double excluded_measure = -1.0;  // exact, n = 1 only
};

/// Both Melnikov families on each grid point. Validation unless
/// tau > n + 2/(iota - 1); OverExclusion if nothing survives.
FilterResult resonance_filter(const std::vector<double>& lambdas, const std::vector<std::vector<double>>& omega_grid,
                              double gamma, double tau, int K_max, double iota);

/// m equispaced points per axis of [0,1]^n, endpoints included.
std::vector<std::vector<double>> omega_grid(int n_freq, int per_axis);

}  // namespace kamred
