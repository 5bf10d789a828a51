#pragma once

#include <functional>

#include "startomo/geom.hpp"
#include "startomo/sphere_grid.hpp"
#include "startomo/star_body.hpp"

namespace startomo {

enum class Parity { none, even, odd };

/// Bounded real function on S^{n-1}.
struct SphereFunction {
  int dim = 3;
  std::function<double(const Vec&)> eval;
  Parity parity = Parity::none;

  double operator()(const Vec& u) const { return eval(u); }
};

SphereFunction radial_power(const StarBody& body, double power);

/// Default great-circle node count for n = 3.
inline constexpr int kDefaultSubsphereNodes = 256;

struct RadonEstimate {
  double value = 0.0;
  /// Monte Carlo standard error (0 for the deterministic n = 3 rule).
  double std_error = 0.0;
};

/// Spherical Radon (Funk) transform R f(u) = int_{S^{n-1} cap u^perp} f.
///
/// n = 3: m-point trapezoid rule on the great circle u^perp, parametrized by
/// complement_basis(u). n >= 4: equal-weight average of m uniform points of
/// S^{n-2} in u^perp scaled by (n-1) omega_{n-1}; the points come from a
/// stream keyed on (rng, +-u), so the estimate is a fixed even function of u.
RadonEstimate radon_estimate(const SphereFunction& f, const Vec& u, int m, const Rng& rng);
double radon(const SphereFunction& f, const Vec& u, int m, const Rng& rng);

/// Intersection body of order i: rho(u) = R(rho_K^i)(u) / (n-1). Lazily
/// evaluated; each direction is computed once and cached.
StarBody intersection_body(const StarBody& body, int i, int m = kDefaultSubsphereNodes, const Rng& rng = Rng{});

/// |int R(f) g - int f R(g)| / max(|int R(f) g|, 1e-300) on the grid.
double self_adjointness_defect(const SphereFunction& f, const SphereFunction& g, const SphereGrid& grid, int m,
                               const Rng& rng = Rng{});

/// Measured ratio R(Y_l0)/Y_l0 averaged over grid nodes where |Y_l0| > 0.1
/// (n = 3). Equals 2 pi P_l(0) for the exact transform; odd l is rejected.
double funk_eigenvalue(int l, int m, const SphereGrid& grid);

}  // namespace startomo
