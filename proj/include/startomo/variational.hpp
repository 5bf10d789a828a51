#pragma once

#include <string>
#include <vector>

#include "startomo/css.hpp"
#include "startomo/radon.hpp"
#include "startomo/star_body.hpp"
#include "startomo/trace.hpp"

namespace startomo {

/// Everything needed to evaluate the operators numerically: the sphere grid
/// for outer integrals and materialization, the subsphere rule size and the
/// stream for n >= 4 subsphere Monte Carlo.
struct Quadrature {
  SphereGrid grid;
  int subsphere_m = kDefaultSubsphereNodes;
  Rng rng{};
};

/// Derivative field f(u) = d rho_{K_t}(u)/dt at t = 0+.
using PerturbationField = SphereFunction;

/// Node-exact copy of the body on q.grid that can still be evaluated off the
/// nodes (bilinear on lat-lon grids, scattered affine fit otherwise).
StarBody materialize_for(const StarBody& body, const Quadrature& q);

/// I_i K materialized on q.grid.
StarBody intersection_materialized(const StarBody& body, int i, const Quadrature& q);

/// I_i^2 K materialized on q.grid (I_i applied to the materialized I_i K).
StarBody intersection_squared(const StarBody& body, int i, const Quadrature& q);

/// V~_{i+1}(I_i K) - c i V~_{i+1}(K).
double functional_F(const StarBody& body, double c, int i, const Quadrature& q);

/// ((i+1)/n) int rho_K^i f.
double dual_volume_derivative(const StarBody& body, const PerturbationField& f, int i, const SphereGrid& grid);

/// (i(i+1)/n) int rho_{I_i^2 K} rho_K^{i-1} f.
double intersection_derivative(const StarBody& body, const PerturbationField& f, int i, const Quadrature& q);

/// Body with radial function rho_K + h f (throws if it is not positive on the grid).
StarBody perturbed_body(const StarBody& body, const PerturbationField& f, double h, const SphereGrid& grid);

/// Forward differences of a functional along rho_K + h f against the
/// closed-form derivative.
struct DerivativeCheck {
  double formula = 0.0;
  double fd_h = 0.0;
  double fd_2h = 0.0;
  /// 2 fd_h - fd_2h, second order in h.
  double richardson = 0.0;
  /// |fd_h - formula| / |formula|.
  double rel_error = 0.0;
};

DerivativeCheck check_dual_volume_derivative(const StarBody& body, const PerturbationField& f, int i, double h,
                                             const SphereGrid& grid);
DerivativeCheck check_intersection_derivative(const StarBody& body, const PerturbationField& f, int i, double h,
                                              const Quadrature& q);

enum class NormKind { sup, l2 };
const char* to_string(NormKind kind);

struct ResidualReport {
  double c_star = 0.0;
  double residual_rel = 0.0;
  NormKind norm_kind = NormKind::l2;
};

/// Best constant c* > 0 for rho_T ~ c rho_K with T = I_i K (order 1) or
/// I_i^2 K (order 2), and the relative residual ||rho_T - c* rho_K|| / ||rho_T||.
/// i = n-1 lies outside the characterization's scope and needs allow_top_order.
ResidualReport fixed_point_residual(const StarBody& body, int i, int order, NormKind norm, const Quadrature& q,
                                    bool allow_top_order = false);

/// Same, from node values of T and K.
ResidualReport fit_residual(std::span<const double> target, std::span<const double> body, NormKind norm,
                            const SphereGrid& grid);

/// (i(i+1)/n) int rho_K^{i-1} f (rho_{I_i^2 K} - c* rho_K), c* the L2 fit.
double stationarity_gap(const StarBody& body, int i, const PerturbationField& f, const Quadrature& q);

/// Witness field rho_{I_i^2 K} - c* rho_K (grid-backed).
PerturbationField witness_perturbation(const StarBody& body, int i, const Quadrature& q);

/// K -> I_i K rescaled so that V~_{i+1} stays at its starting value. Row s
/// holds the order-1 residual of K_s, its sup distance to the ball with the
/// same V~_{i+1}, and V~_{i+1}(K_s).
FunctionalTrace iterate_intersection(const StarBody& body, int i, int steps, const Quadrature& q,
                                     bool allow_top_order = false);

/// V~_{i+1}(I_i B) / V~_{i+1}(B)^i = omega_{n-1}^{i+1} omega_n^{1-i}.
double busemann_bound(int n, int i);
/// V~_{i+1}(I_i K) / V~_{i+1}(K)^i.
double busemann_ratio(const StarBody& body, int i, const Quadrature& q);

/// One row per body: ratio, bound and bound - ratio.
FunctionalTrace busemann_scan(const std::vector<BodySpec>& bodies, int n, int i, const Quadrature& q);

/// V~_{i+1}(I_i K_t) and V~_{i+1}(K_t) along the conjugated perturbation
/// K_t (n = 3, i = 1), indexed by t.
FunctionalTrace css_monotonicity_trace(const StarBody& body, int i, const Vec& u, const std::vector<double>& t_grid,
                                       int fiber_count, const Quadrature& q, const FiberOptions& options = {});

}  // namespace startomo
