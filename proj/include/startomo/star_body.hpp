#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "startomo/geom.hpp"
#include "startomo/sphere_grid.hpp"

namespace startomo {

enum class BodyKind {
  ball,
  ellipsoid,
  perturbed_ball,
  shifted_ball,
  cube,
  grid_backed,
  operator_derived,
};

const char* to_string(BodyKind kind);

/// Radial function u -> rho(u), evaluated on unit vectors.
using RadialFunction = std::function<double(const Vec&)>;

/// Bounds 0 <= lo <= rho(u) <= hi over the whole sphere.
struct RadialBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Node values of a body on one sphere grid.
struct GridValues {
  SphereGrid grid;
  std::vector<double> values;
};

/// A star body in R^n, described by its strictly positive radial function.
///
/// Values are immutable. A body may carry node values on one sphere grid
/// (materialized bodies); sampling on that grid then returns them verbatim.
class StarBody {
 public:
  StarBody(int dim, BodyKind kind, RadialFunction radial, RadialBounds bounds, std::string label = {});

  int dim() const { return dim_; }
  BodyKind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  double radial(const Vec& u) const { return radial_(u); }
  const RadialFunction& radial_function() const { return radial_; }
  const RadialBounds& bounds() const { return bounds_; }
  double max_radius() const { return bounds_.hi; }

  std::optional<double> lipschitz_bound() const { return lipschitz_; }
  StarBody with_lipschitz_bound(double bound) const;

  const GridValues* grid_values() const { return grid_.get(); }
  StarBody with_grid_values(std::shared_ptr<const GridValues> grid) const;

 private:
  int dim_;
  BodyKind kind_;
  RadialFunction radial_;
  RadialBounds bounds_;
  std::string label_;
  std::optional<double> lipschitz_;
  std::shared_ptr<const GridValues> grid_;
};

struct BallSpec {
  double r = 1.0;
};
struct EllipsoidSpec {
  std::vector<double> axes;
};
/// rho(u) = r (1 + eps Y_lm(u)), n = 3 only.
struct PerturbedBallSpec {
  double r = 1.0;
  int l = 2;
  int m = 0;
  double eps = 0.1;
};
/// Ball of radius r centered at c (|c| < r).
struct ShiftedBallSpec {
  std::vector<double> center;
  double r = 1.0;
};
/// Cube [-h, h]^n.
struct CubeSpec {
  double h = 1.0;
};

using BodySpec = std::variant<BallSpec, EllipsoidSpec, PerturbedBallSpec, ShiftedBallSpec, CubeSpec>;

std::string describe(const BodySpec& spec);

/// Analytic catalog body in dimension n. Throws std::invalid_argument when
/// the parameters do not give a strictly positive radial function.
StarBody catalog_body(const BodySpec& spec, int n);

StarBody make_ball(int n, double r);

/// Power body <K^q>: rho -> rho^q.
StarBody power_body(const StarBody& body, double q);

/// Dilation lambda K: rho -> lambda rho.
StarBody scale_body(const StarBody& body, double lambda);

/// Radial values at every grid node (reuses stored node values when the body
/// was materialized on this grid).
std::vector<double> sample(const StarBody& body, const SphereGrid& grid);

/// (1/n) sum_k w_k rho(u_k)^i.
double dual_volume(const StarBody& body, double i, const SphereGrid& grid);
double dual_volume(std::span<const double> radial_values, double i, const SphereGrid& grid);

/// max_k |rho_A(u_k) - rho_B(u_k)| over grid nodes.
double sup_distance(const StarBody& a, const StarBody& b, const SphereGrid& grid);

/// Origin-centered ball with the same volume (V~_n) as the body on this grid.
StarBody equivalent_ball(const StarBody& body, const SphereGrid& grid);

/// Grid-backed copy of the body. Exact at grid nodes; off-node evaluation
/// interpolates bilinearly in (colatitude, longitude) on lat-lon grids, with
/// each pole carrying the mean of its adjacent row. Off-node evaluation on
/// Monte Carlo grids throws std::domain_error.
StarBody materialize(const StarBody& body, const SphereGrid& grid);

/// Grid-backed body built directly from node values.
StarBody from_grid_values(const SphereGrid& grid, std::vector<double> values, std::string label = "grid");

/// Grid-backed body on any grid (typically Monte Carlo, n >= 4) whose
/// off-node values come from a weighted local quadratic least-squares fit in
/// tangent coordinates over the nearest `neighbors` nodes (affine when there
/// are too few neighbours for a stable quadratic). Exact at nodes.
StarBody scattered_interpolant(const SphereGrid& grid, std::vector<double> values, int neighbors = 40,
                               std::string label = "scattered");

}  // namespace startomo
