#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace kamred {

/// How V is realized on [-R0, R0].
enum class InnerProfile {
  None,   ///< the asymptotic form is used everywhere (only valid when w is empty)
  Blend,  ///< even degree-6 polynomial matching V, V', V'', V''' at ±R0
};

/// Even potential V(x) = |x|^{2 ell} (c0 + sum_j c_j / |x|^{2j}) for |x| >= R0,
/// with an implementation-chosen even C^3 profile inside.
struct PotentialSpec {
  double ell = 2.0;
  double c0 = 1.0;
  std::vector<double> w;  ///< c_1, c_2, ... of the inverse-power correction
  double R0 = 1.0;
  InnerProfile inner = InnerProfile::Blend;

  static PotentialSpec monomial(double ell, double c0 = 1.0, double R0 = 1.0);
};

void to_json(nlohmann::json& j, const PotentialSpec& spec);
void from_json(const nlohmann::json& j, PotentialSpec& spec);

struct AssumptionReport {
  double C1_fit = 0.0;  ///< tightest C1 in |x V^(j)| <= C1 |V^(j-1)|, j = 1..3
  double D1_fit = 0.0;  ///< min of V / |x|^{2 ell}
  double D2_fit = 0.0;  ///< max of V / |x|^{2 ell}
  bool convexity_ok = false;
  bool scaling_ok = false;
  double R_tilde = 0.0;  ///< radius beyond which V <= x V'
};

/// Immutable evaluator for a validated PotentialSpec. Construction solves the
/// inner blend and locates the threshold radius used by the turning-point
/// machinery.
class Potential {
 public:
  explicit Potential(PotentialSpec spec);

  const PotentialSpec& spec() const { return spec_; }
  double ell() const { return spec_.ell; }

  /// V^{(order)}(x), order in 0..3.
  double eval(double x, int order = 0) const;
  double operator()(double x) const { return eval(x, 0); }

  /// min{x >= R0 : V'(x) >= V(R0)/R0}.
  double r_tilde() const { return r_tilde_; }
  /// Threshold radius R: V <= x V' on [R/2, inf) and V < V(R) on [0, R).
  double threshold_radius() const { return threshold_radius_; }

  /// Unique X >= R/2 with V(X) = lambda; throws NoTurningPoint when
  /// lambda < V(R).
  double turning_point(double lambda) const;

  /// Checks Assumption 1.1 and the two-sided scaling bound on sample points
  /// with |x| >= R0. Throws Validation naming the first failing point.
  AssumptionReport verify_assumptions(const std::vector<double>& grid) const;

 private:
  double outer(double x, int order) const;
  double blend(double x, int order) const;

  PotentialSpec spec_;
  std::array<double, 4> blend_coeffs_{};  // a0 + a1 x^2 + a2 x^4 + a3 x^6
  double r_tilde_ = 0.0;
  double threshold_radius_ = 0.0;
};

}  // namespace kamred
