#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "kamred/matclass.hpp"

namespace kamred {

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;
  std::vector<double> sobolev_s;
  std::vector<std::vector<double>> norms;  // norms[k][sample] = ||x||_{s_k}
  double norm_drift = 0.0;                 // max | ||x(t)|| - ||x(0)|| |
  double dt_used = 0.0;
};

/// ||x||_s = (sum_j j^s |x_j|^2)^{1/2}, j from 1.
double sobolev_norm(const Eigen::VectorXcd& x, double s);

struct DirectOptions {
  int samples = 1000;                   // stored states besides t0
  std::vector<double> sobolev_s{1.0, 2.0};
  double drift_tol = 1e-6;
  int max_halvings = 4;
};

/// i x' = (diag(lambda) + P(omega t)) x from t0 to t0 + T (T may be negative),
/// classical RK4 in the frame rotating with diag(lambda). dt is halved while
/// the norm drift exceeds drift_tol; StepSize error once the halvings run out.
Trajectory evolve_direct(const std::vector<double>& lambdas, const QPMatrix& P, const std::vector<double>& omega,
                         const Eigen::VectorXcd& x0, double T, double dt, const DirectOptions& opts = {},
                         double t0 = 0.0);

/// Closed-form flow of i y' = diag(lambda_j + mu_j(omega t)) y at the given times.
Trajectory evolve_reduced(const std::vector<double>& lambdas_inf, const std::vector<TorusFunction>& mus_inf,
                          const std::vector<double>& omega, const Eigen::VectorXcd& y0,
                          const std::vector<double>& times, const std::vector<double>& sobolev_s = {1.0, 2.0});

/// y(0) = U(0)^{-1} x(0).
Eigen::VectorXcd reduced_initial(const QPMatrix& U, const Eigen::VectorXcd& x0);

struct FlowComparison {
  double max_deviation = 0.0;
  std::vector<double> deviation;     // per sample
  std::vector<double> sobolev_s;
  std::vector<double> sobolev_sup;   // sup_t ||x(t)||_s / ||x(0)||_s
};

/// max_t ||x(t) - U(omega t) y(t)||_0. GridMismatch unless the time grids agree.
FlowComparison compare_flows(const Trajectory& direct, const Trajectory& reduced, const QPMatrix& U,
                             const std::vector<double>& omega);

/// t, deviation, norm_s... per sample.
void write_flow_csv(std::ostream& os, const Trajectory& direct, const FlowComparison& cmp);

}  // namespace kamred
