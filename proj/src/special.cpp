#include "kamred/special.hpp"

#include <cmath>
#include <numbers>

#include "kamred/error.hpp"
#include "kamred/quadrature.hpp"

namespace kamred {

namespace {

constexpr double kNu = 1.0 / 3.0;

using cld = std::complex<long double>;

// sum_k (-w)^k / (k! Gamma(k + a + 1)) with w = z^2/4, in long double.
cld bessel_sum(cld w, long double a) {
  cld term = 1.0L / std::tgamma(a + 1.0L);
  cld sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -w / (static_cast<long double>(k) * (k + a));
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

cplx hankel_13_series(cplx z) {
  const cld zl(z.real(), z.imag());
  const cld w = zl * zl / 4.0L;
  const cld half_pow = std::exp(static_cast<long double>(kNu) * std::log(zl / 2.0L));
  const cld jp = half_pow * bessel_sum(w, kNu);
  const cld jm = bessel_sum(w, -kNu) / half_pow;
  const long double pi = std::numbers::pi_v<long double>;
  const cld phase = std::exp(cld(0.0L, -kNu * pi));
  const cld value = (jm - phase * jp) / (cld(0.0L, 1.0L) * std::sin(kNu * pi));
  return {static_cast<double>(value.real()), static_cast<double>(value.imag())};
}

cplx hankel_13_integral(cplx z) {
  // Hankel's integral, u = t^6 removes the u^{-1/6} endpoint singularity:
  // int_0^inf e^{-u} u^{nu-1/2} (1 + iu/(2z))^{nu-1/2} du
  //   = int_0^inf 6 t^4 e^{-t^6} (1 + i t^6/(2z))^{-1/6} dt.
  const double pi = std::numbers::pi;
  const cplx I(0.0, 1.0);
  const auto f = [&](double t) {
    const double u = std::pow(t, 6);
    return 6.0 * std::pow(t, 4) * std::exp(-u) * std::pow(1.0 + I * u / (2.0 * z), kNu - 0.5);
  };
  const cplx integral = integrate_gl(f, 0.0, 2.1, 24, 24);
  const cplx pre = std::sqrt(2.0 / (pi * z)) * std::exp(I * (z - kNu * pi / 2.0 - pi / 4.0)) / std::tgamma(kNu + 0.5);
  return pre * integral;
}

cplx hankel_13(cplx z) {
  const double r = std::abs(z);
  const bool negative_real = z.real() < 0.0 && std::abs(z.imag()) <= 1e-14 * r;
  const bool positive_imag = z.imag() > 0.0 && std::abs(z.real()) <= 1e-14 * r;
  if (!(r > 0.0) || !(negative_real || positive_imag) || !std::isfinite(r)) {
    throw Error(ErrorCode::Domain, "hankel_13: argument must lie on (-inf,0) or (0,+i inf)");
  }
  // Snap to the ray so a -0.0 imaginary part cannot flip the branch.
  const cplx zr = negative_real ? cplx(-r, 0.0) : cplx(0.0, r);
  return r <= kHankelSwitchRadius ? hankel_13_series(zr) : hankel_13_integral(zr);
}

cplx hankel_13_lower(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::Domain, "hankel_13_lower: r must be positive");
  const cplx h1 = r <= kHankelSwitchRadius ? hankel_13_series(r) : hankel_13_integral(r);
  const cplx h2 = std::conj(h1);
  return h1 + std::exp(cplx(0.0, -std::numbers::pi / 3.0)) * h2;
}

}  // namespace kamred
