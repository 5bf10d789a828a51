#pragma once

#include <array>
#include <vector>

#include "startomo/geom.hpp"
#include "startomo/interval_union.hpp"
#include "startomo/sphere_grid.hpp"
#include "startomo/star_body.hpp"
#include "startomo/trace.hpp"

namespace startomo {

inline constexpr int kDefaultSGrid = 1024;
inline constexpr double kDefaultFiberTol = 1e-10;

/// Square lattice of count x count points y = a e_1 + b e_2 over
/// [-extent, extent]^2 in u^perp (n = 3), where (e_1, e_2) =
/// complement_basis(u). count = 0 means no lattice: every fiber is computed
/// exactly on demand.
class FiberGrid {
 public:
  FiberGrid(const Vec& u, double extent, int count);
  /// Lattice covering the projection of K (extent = max radius).
  static FiberGrid covering(const StarBody& body, const Vec& u, int count);

  const Vec& direction() const { return u_; }
  const Vec& axis(int k) const { return basis_[k]; }
  double extent() const { return extent_; }
  int count() const { return count_; }
  double spacing() const;
  Vec node(int a, int b) const;
  /// Lattice coordinate of y along axis k, in node units.
  double coordinate(const Vec& y, int k) const;

 private:
  Vec u_;
  std::array<Vec, 2> basis_;
  double extent_;
  int count_;
};

struct FiberOptions {
  int s_grid = kDefaultSGrid;
  double tol = kDefaultFiberTol;
};

/// {s : y + s u in K} for y in u^perp (n = 3). The bracket grid covers the
/// chord |y + s u| <= R of the circumscribed ball, R = max radius; roots are
/// refined by bisection to tol. Intervals shorter than tol are dropped and a
/// union shorter than 1e-8 is returned empty.
IntervalUnion fiber_intervals(const StarBody& body, const Vec& u, const Vec& y, const FiberOptions& options = {});

/// Result of one body-level flow step together with the per-run
/// star-shapedness check (64 random rays).
struct CssResult {
  StarBody body;
  int rays_checked = 0;
  int ray_violations = 0;
};

/// S^t_u K materialized on a lat-lon grid. Membership is decided fiberwise:
/// at lattice nodes the symmetrized fibers are exact; between nodes each
/// interval's center and squared half-length are interpolated bilinearly when
/// all four corners carry the same number of intervals, and the fiber is
/// recomputed exactly otherwise. Radii come from a coarse outward scan followed by bisection to
/// tol on the outermost membership transition.
CssResult css_flow(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                   const FiberOptions& options = {});

/// css_flow(...).body; throws std::runtime_error when the star-shapedness
/// check fails.
StarBody css_body(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                  const FiberOptions& options = {});

/// |V(S^t_u K) - V(K)| / V(K), both as V~_n on the grid.
double volume_drift(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                    const FiberOptions& options = {});

/// K_t = <(S^t_u <K^{(i+1)/n}>)^{n/(i+1)}>.
StarBody conjugated_perturbation(const StarBody& body, int i, const Vec& u, double t, int fiber_count,
                                 const SphereGrid& grid, const FiberOptions& options = {});

struct SteinerOptions {
  int max_steps = 50;
  double stop_dist = 1e-2;
  int fiber_count = 128;
  FiberOptions fiber;
};

/// Iterated full Steiner symmetrization in uniformly random directions.
/// Row 0 is the starting body. Columns: direction_x/y/z, sup_distance (to
/// the equivalent ball of the starting body) and volume_drift.
FunctionalTrace iterate_steiner(const StarBody& body, Rng rng, const SphereGrid& grid,
                                const SteinerOptions& options = {});

}  // namespace startomo
