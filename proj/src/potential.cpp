#include "kamred/potential.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "kamred/error.hpp"

namespace kamred {

namespace {

// d^k/dx^k of x^p for x > 0 (falling factorial times the reduced power).
double power_derivative(double x, double p, int k) {
  double coeff = 1.0;
  for (int i = 0; i < k; ++i) coeff *= (p - i);
  if (coeff == 0.0) return 0.0;
  return coeff * std::pow(x, p - k);
}

std::string at(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

PotentialSpec PotentialSpec::monomial(double ell, double c0, double R0) {
  PotentialSpec spec;
  spec.ell = ell;
  spec.c0 = c0;
  spec.R0 = R0;
  spec.inner = InnerProfile::None;
  return spec;
}

void to_json(nlohmann::json& j, const PotentialSpec& spec) {
  j = nlohmann::json{{"ell", spec.ell},
                     {"c0", spec.c0},
                     {"w", spec.w},
                     {"R0", spec.R0},
                     {"inner", spec.inner == InnerProfile::None ? "none" : "blend"}};
}

void from_json(const nlohmann::json& j, PotentialSpec& spec) {
  spec.ell = j.at("ell").get<double>();
  spec.c0 = j.at("c0").get<double>();
  spec.w = j.value("w", std::vector<double>{});
  spec.R0 = j.at("R0").get<double>();
  const std::string inner = j.value("inner", std::string("blend"));
  if (inner == "none") {
    spec.inner = InnerProfile::None;
  } else if (inner == "blend") {
    spec.inner = InnerProfile::Blend;
  } else {
    throw Error(ErrorCode::Config, "potential.inner must be \"none\" or \"blend\", got \"" + inner + "\"");
  }
}

Potential::Potential(PotentialSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.ell > 1.0)) throw Error(ErrorCode::Validation, "potential: ell must exceed 1");
  if (!(spec_.c0 > 0.0)) throw Error(ErrorCode::Validation, "potential: c0 must be positive");
  if (!(spec_.R0 > 0.0)) throw Error(ErrorCode::Validation, "potential: R0 must be positive");
  if (spec_.inner == InnerProfile::None && !spec_.w.empty()) {
    throw Error(ErrorCode::Validation,
                "potential: inner profile \"none\" requires w = 0 (the expansion is singular at 0)");
  }

  if (spec_.inner == InnerProfile::Blend) {
    Eigen::Matrix4d M;
    Eigen::Vector4d rhs;
    for (int m = 0; m < 4; ++m) {
      for (int k = 0; k < 4; ++k) M(m, k) = power_derivative(spec_.R0, 2.0 * k, m);
      rhs(m) = outer(spec_.R0, m);
    }
    const Eigen::Vector4d a = M.fullPivLu().solve(rhs);
    for (int k = 0; k < 4; ++k) blend_coeffs_[k] = a(k);
    // Solve roundoff can leave V(0) at -1e-16 when V is itself a polynomial.
    if (std::abs(blend_coeffs_[0]) < 1e-13 * std::abs(rhs(0))) blend_coeffs_[0] = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = spec_.R0 * i / 400.0;
      if (blend(x, 0) < 0.0) {
        throw Error(ErrorCode::Validation,
                    "potential: inner blend is negative at x=" + at(x) + " (A1 requires V >= 0)");
      }
    }
  }

  // radius beyond which V <= x V'
  const double target = eval(spec_.R0, 0) / spec_.R0;
  if (eval(spec_.R0, 1) >= target) {
    r_tilde_ = spec_.R0;
  } else {
    double lo = spec_.R0;
    double hi = spec_.R0;
    double step = spec_.R0 / 64.0;
    int guard = 0;
    while (eval(hi, 1) < target) {
      lo = hi;
      hi += step;
      step *= 1.25;
      if (++guard > 10000) throw Error(ErrorCode::Validation, "potential: V' never reaches V(R0)/R0");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (eval(mid, 1) >= target ? hi : lo) = mid;
    }
    r_tilde_ = hi;
  }

  // Threshold radius: smallest scanned R >= 2 R~ meeting both conditions.
  const double dR = r_tilde_ / 256.0;
  for (int k = 0; k < 100000; ++k) {
    const double R = 2.0 * r_tilde_ + k * dR;
    bool ok = true;
    for (int i = 0; i <= 512 && ok; ++i) {
      const double x = 0.5 * R * std::pow(128.0, i / 512.0);
      ok = eval(x, 0) <= x * eval(x, 1) * (1.0 + 1e-13);
    }
    const double VR = eval(R, 0);
    for (int i = 0; i < 512 && ok; ++i) {
      const double x = R * i / 512.0;
      ok = std::abs(eval(x, 0)) < VR;
    }
    if (ok) {
      threshold_radius_ = R;
      return;
    }
  }
  throw Error(ErrorCode::Validation, "potential: no threshold radius found");
}

double Potential::outer(double x, int order) const {
  const double ax = std::abs(x);
  const double p0 = 2.0 * spec_.ell;
  double value = spec_.c0 * power_derivative(ax, p0, order);
  for (std::size_t j = 0; j < spec_.w.size(); ++j) {
    value += spec_.w[j] * power_derivative(ax, p0 - 2.0 * static_cast<double>(j + 1), order);
  }
  return (x < 0.0 && order % 2 == 1) ? -value : value;
}

double Potential::blend(double x, int order) const {
  double value = 0.0;
  for (int k = 0; k < 4; ++k) {
    double coeff = 1.0;
    for (int i = 0; i < order; ++i) coeff *= (2 * k - i);
    if (coeff == 0.0) continue;
    value += blend_coeffs_[k] * coeff * std::pow(x, 2 * k - order);
  }
  return value;
}

double Potential::eval(double x, int order) const {
  if (order < 0 || order > 3) {
    throw Error(ErrorCode::UnsupportedDerivative,
                "potential: derivative order " + std::to_string(order) + " not supported (0..3)");
  }
  if (spec_.inner == InnerProfile::Blend && std::abs(x) < spec_.R0) return blend(x, order);
  return outer(x, order);
}

double Potential::turning_point(double lambda) const {
  const double R = threshold_radius_;
  const double VR = eval(R, 0);
  if (!(lambda >= VR)) {
    throw Error(ErrorCode::NoTurningPoint,
                "turning_point: lambda=" + at(lambda) + " is below V(R)=" + at(VR) + " (R=" + at(R) + ")");
  }
  double lo = 0.5 * R;
  double hi = R;
  while (eval(hi, 0) < lambda) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid, 0) < lambda ? lo : hi) = mid;
  }
  double X = 0.5 * (lo + hi);
  for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it) {
    double next = X - (eval(X, 0) - lambda) / eval(X, 1);
    const bool newton = next > lo && next < hi;
    if (!newton) next = 0.5 * (lo + hi);
    const double f = eval(next, 0) - lambda;
    if (f == 0.0) return next;
    (f < 0.0 ? lo : hi) = next;
    const bool done = newton && std::abs(next - X) <= 1e-15 * X;
    X = next;
    if (done) break;
  }
  return X;
}

AssumptionReport Potential::verify_assumptions(const std::vector<double>& grid) const {
  if (grid.empty()) throw Error(ErrorCode::Domain, "verify_assumptions: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < grid[i - 1]) throw Error(ErrorCode::Domain, "verify_assumptions: grid not sorted");
  }

  AssumptionReport report;
  report.R_tilde = r_tilde_;
  report.D1_fit = std::numeric_limits<double>::infinity();
  report.D2_fit = 0.0;
  const double p = 2.0 * spec_.ell;

  for (double x : grid) {
    if (std::abs(x) < spec_.R0) {
      throw Error(ErrorCode::Domain, "verify_assumptions: sample x=" + at(x) + " lies inside R0");
    }
    const std::array<double, 4> d{eval(x, 0), eval(x, 1), eval(x, 2), eval(x, 3)};
    if (d[0] < 0.0) {
      throw Error(ErrorCode::Validation, "A1 violated at x=" + at(x) + ": V(x) < 0");
    }
    if (d[2] < -1e-12 * std::abs(d[0])) {
      throw Error(ErrorCode::Validation, "Assumption 1.1 (i) violated at x=" + at(x) + ": V''(x) < 0");
    }
    for (int j = 1; j <= 3; ++j) {
      const double num = std::abs(x * d[j]);
      const double den = std::abs(d[j - 1]);
      if (num == 0.0) continue;
      if (den == 0.0) {
        throw Error(ErrorCode::Validation, "Assumption 1.1 (ii) violated at x=" + at(x) + ", j=" +
                                               std::to_string(j) + ": V^(j-1)(x) = 0");
      }
      report.C1_fit = std::max(report.C1_fit, num / den);
    }
    const double ratio = d[0] / std::pow(std::abs(x), p);
    report.D1_fit = std::min(report.D1_fit, ratio);
    report.D2_fit = std::max(report.D2_fit, ratio);
  }
  report.convexity_ok = true;
  if (!(report.D1_fit > 0.0)) {
    throw Error(ErrorCode::Validation, "Assumption 1.1 (iii) violated: V/|x|^{2l} not bounded below");
  }

  const double C1 = std::max(1.0, report.C1_fit);
  constexpr double rel = 1e-12;
  for (double theta : {0.5, 0.75}) {
    for (double x : grid) {
      const double ax = std::abs(x);
      if (theta * ax < r_tilde_) continue;
      const double V = eval(ax, 0);
      const double Vt = eval(theta * ax, 0);
      if (Vt < std::pow(theta, C1) * V * (1.0 - rel)) {
        throw Error(ErrorCode::Validation, "scaling lower bound theta^C1 V(x) <= V(theta x) violated at x=" +
                                               at(x) + ", theta=" + at(theta));
      }
      if (Vt > theta * V * (1.0 + rel)) {
        throw Error(ErrorCode::Validation, "scaling upper bound V(theta x) <= theta V(x) violated at x=" +
                                               at(x) + ", theta=" + at(theta));
      }
    }
  }
  report.scaling_ok = true;
  return report;
}

}  // namespace kamred
