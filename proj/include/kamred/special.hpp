#pragma once

#include <complex>

namespace kamred {

using cplx = std::complex<double>;

/// H^(1)_{1/3}(z), principal branch, for z on the negative real axis or the
/// positive imaginary axis. Anything else throws Domain.
cplx hankel_13(cplx z);

/// Continuation of H^(1)_{1/3} to r e^{-i pi}, r > 0:
/// H^(1)(r) + e^{-i pi/3} H^(2)(r).
cplx hankel_13_lower(double r);

/// The two evaluation regimes, exposed for overlap checks. Both take any z
/// with -pi/2 < arg z <= pi, z != 0.
cplx hankel_13_series(cplx z);
cplx hankel_13_integral(cplx z);

inline constexpr double kHankelSwitchRadius = 8.0;

}  // namespace kamred
