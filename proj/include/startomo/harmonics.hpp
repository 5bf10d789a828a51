#pragma once

#include "startomo/geom.hpp"

namespace startomo {

/// Legendre polynomial P_l(x).
double legendre_p(int l, double x);

/// Real spherical harmonic Y_lm on S^2, orthonormal: int_{S^2} Y_lm^2 = 1.
/// m > 0 is the cos(m phi) branch, m < 0 the sin(|m| phi) branch.
double real_sph_harm(int l, int m, const Vec& u);

/// Upper bound for |Y_lm| on S^2, sqrt((2l+1)/(2 pi)).
double real_sph_harm_bound(int l);

}  // namespace startomo
