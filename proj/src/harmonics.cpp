#include "startomo/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace startomo {

double legendre_p(int l, double x) {
  if (l < 0) throw std::invalid_argument("legendre_p: negative degree");
  return std::legendre(static_cast<unsigned>(l), x);
}

double real_sph_harm(int l, int m, const Vec& u) {
  if (u.size() != 3) throw std::invalid_argument("real_sph_harm: requires a direction in R^3");
  if (l < 0 || std::abs(m) > l) throw std::invalid_argument("real_sph_harm: need 0 <= |m| <= l");
  const double z = std::clamp(u[2] / u.norm(), -1.0, 1.0);
  const double theta = std::acos(z);
  const unsigned am = static_cast<unsigned>(std::abs(m));
  // std::sph_legendre(l, m, theta) = Y_l^m(theta, 0), complex-orthonormal.
  const double base = std::sph_legendre(static_cast<unsigned>(l), am, theta);
  if (m == 0) return base;
  const double phi = std::atan2(u[1], u[0]);
  return m > 0 ? std::numbers::sqrt2 * base * std::cos(am * phi)
               : std::numbers::sqrt2 * base * std::sin(am * phi);
}

double real_sph_harm_bound(int l) { return std::sqrt((2.0 * l + 1.0) / (2.0 * std::numbers::pi)); }

}  // namespace startomo
