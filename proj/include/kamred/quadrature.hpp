#pragma once

#include <cmath>
#include <vector>

namespace kamred {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule; nodes by Newton iteration on P_n.
/// Results for each n are computed once and cached.
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre integral of f over [a, b].
template <class F>
auto integrate_gl(F&& f, double a, double b, int order = 16, int panels = 1) {
  const GaussRule& rule = gauss_legendre(order);
  const double width = (b - a) / panels;
  decltype(f(a)) sum{};
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      sum += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    }
  }
  return sum * (0.5 * width);
}

}  // namespace kamred
