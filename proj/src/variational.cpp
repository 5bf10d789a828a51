#include "startomo/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace startomo {

namespace {

void require_order(int n, int i, bool allow_top_order) {
  if (i < 1 || i > n - 1) throw std::invalid_argument("variational: i must lie in [1, n-1]");
  if (i == n - 1 && !allow_top_order) {
    throw std::invalid_argument("variational: i = n-1 is outside the ball characterization; pass allow_top_order");
  }
}

StarBody grid_body(const Quadrature& q, std::vector<double> values, std::string label) {
  if (q.grid.is_lat_lon()) return from_grid_values(q.grid, std::move(values), std::move(label));
  return scattered_interpolant(q.grid, std::move(values), 40, std::move(label));
}

void require_finite_positive(std::span<const double> values, const std::string& where) {
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::runtime_error(where + ": radial values left the positive floating-point range");
    }
  }
}

}  // namespace

StarBody materialize_for(const StarBody& body, const Quadrature& q) {
  if (body.kind() == BodyKind::ball) return body;
  if (const GridValues* gv = body.grid_values(); gv && gv->grid == q.grid) return body;
  return grid_body(q, sample(body, q.grid), body.label());
}

StarBody intersection_materialized(const StarBody& body, int i, const Quadrature& q) {
  const StarBody ik = intersection_body(body, i, q.subsphere_m, q.rng);
  if (ik.kind() == BodyKind::ball) return make_ball(body.dim(), ik.radial(q.grid.node(0)));
  return grid_body(q, sample(ik, q.grid), "I" + std::to_string(i) + "(" + body.label() + ")");
}

StarBody intersection_squared(const StarBody& body, int i, const Quadrature& q) {
  return intersection_materialized(intersection_materialized(body, i, q), i, q);
}

double functional_F(const StarBody& body, double c, int i, const Quadrature& q) {
  const StarBody ik = intersection_body(body, i, q.subsphere_m, q.rng);
  return dual_volume(ik, i + 1, q.grid) - c * i * dual_volume(body, i + 1, q.grid);
}

double dual_volume_derivative(const StarBody& body, const PerturbationField& f, int i, const SphereGrid& grid) {
  if (f.dim != body.dim() || grid.dim() != body.dim()) throw std::invalid_argument("dual_volume_derivative: dimension mismatch");
  const auto rho = sample(body, grid);
  std::vector<double> integrand(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) integrand[k] = std::pow(rho[k], i) * f(grid.node(k));
  return (i + 1.0) / body.dim() * grid.integrate(integrand);
}

double intersection_derivative(const StarBody& body, const PerturbationField& f, int i, const Quadrature& q) {
  require_order(body.dim(), i, true);
  if (f.dim != body.dim()) throw std::invalid_argument("intersection_derivative: dimension mismatch");
  const auto rho = sample(body, q.grid);
  const auto t = sample(intersection_squared(body, i, q), q.grid);
  std::vector<double> integrand(q.grid.size());
  for (std::size_t k = 0; k < q.grid.size(); ++k) integrand[k] = t[k] * std::pow(rho[k], i - 1) * f(q.grid.node(k));
  return i * (i + 1.0) / body.dim() * q.grid.integrate(integrand);
}

StarBody perturbed_body(const StarBody& body, const PerturbationField& f, double h, const SphereGrid& grid) {
  if (f.dim != body.dim()) throw std::invalid_argument("perturbed_body: dimension mismatch");
  double fmax = 0.0;
  for (const Vec& u : grid.nodes()) fmax = std::max(fmax, std::abs(f(u)));
  // Bounds are widened by 5% of the sampled |f| to cover off-node excursions.
  const double spread = 1.05 * std::abs(h) * fmax;
  const RadialBounds b{std::max(body.bounds().lo - spread, 0.0), body.bounds().hi + spread};
  StarBody out(body.dim(), BodyKind::operator_derived,
               [inner = body.radial_function(), eval = f.eval, h](const Vec& u) { return inner(u) + h * eval(u); }, b,
               body.label() + "+h*f");
  for (const Vec& u : grid.nodes()) {
    if (!(out.radial(u) > 0.0)) throw std::domain_error("perturbed_body: radial function is not positive");
  }
  return out;
}

namespace {

template <class Functional>
DerivativeCheck finite_difference(double formula, double h, Functional&& value) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  const double base = value(0.0);
  DerivativeCheck check;
  check.formula = formula;
  check.fd_h = (value(h) - base) / h;
  check.fd_2h = (value(2.0 * h) - base) / (2.0 * h);
  check.richardson = 2.0 * check.fd_h - check.fd_2h;
  check.rel_error = std::abs(check.fd_h - formula) / std::max(std::abs(formula), std::numeric_limits<double>::min());
  return check;
}

}  // namespace

DerivativeCheck check_dual_volume_derivative(const StarBody& body, const PerturbationField& f, int i, double h,
                                             const SphereGrid& grid) {
  return finite_difference(dual_volume_derivative(body, f, i, grid), h, [&](double step) {
    return dual_volume(step == 0.0 ? body : perturbed_body(body, f, step, grid), i + 1, grid);
  });
}

DerivativeCheck check_intersection_derivative(const StarBody& body, const PerturbationField& f, int i, double h,
                                              const Quadrature& q) {
  return finite_difference(intersection_derivative(body, f, i, q), h, [&](double step) {
    const StarBody k = step == 0.0 ? body : perturbed_body(body, f, step, q.grid);
    return dual_volume(intersection_body(k, i, q.subsphere_m, q.rng), i + 1, q.grid);
  });
}

const char* to_string(NormKind kind) { return kind == NormKind::sup ? "sup" : "L2"; }

ResidualReport fit_residual(std::span<const double> target, std::span<const double> body, NormKind norm,
                            const SphereGrid& grid) {
  if (target.size() != grid.size() || body.size() != grid.size()) throw std::invalid_argument("fit_residual: size mismatch");
  ResidualReport report;
  report.norm_kind = norm;
  if (norm == NormKind::l2) {
    double tk = 0.0;
    double kk = 0.0;
    double tt = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      tk += grid.weight(k) * target[k] * body[k];
      kk += grid.weight(k) * body[k] * body[k];
      tt += grid.weight(k) * target[k] * target[k];
    }
    report.c_star = tk / kk;
    double rr = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d = target[k] - report.c_star * body[k];
      rr += grid.weight(k) * d * d;
    }
    report.residual_rel = std::sqrt(rr / tt);
    return report;
  }

  auto worst = [&](double c) {
    double m = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) m = std::max(m, std::abs(target[k] - c * body[k]));
    return m;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double tmax = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    lo = std::min(lo, target[k] / body[k]);
    hi = std::max(hi, target[k] / body[k]);
    tmax = std::max(tmax, std::abs(target[k]));
  }
  // max_k |T_k - c K_k| is convex in c and minimized between the extreme ratios.
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double x1 = b - golden * (b - a);
  double x2 = a + golden * (b - a);
  double f1 = worst(x1);
  double f2 = worst(x2);
  for (int iter = 0; iter < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - golden * (b - a);
      f1 = worst(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + golden * (b - a);
      f2 = worst(x2);
    }
  }
  report.c_star = 0.5 * (a + b);
  report.residual_rel = worst(report.c_star) / tmax;
  return report;
}

ResidualReport fixed_point_residual(const StarBody& body, int i, int order, NormKind norm, const Quadrature& q,
                                    bool allow_top_order) {
  require_order(body.dim(), i, allow_top_order);
  if (order != 1 && order != 2) throw std::invalid_argument("fixed_point_residual: order must be 1 or 2");
  const StarBody target = order == 1 ? intersection_materialized(body, i, q) : intersection_squared(body, i, q);
  return fit_residual(sample(target, q.grid), sample(body, q.grid), norm, q.grid);
}

double stationarity_gap(const StarBody& body, int i, const PerturbationField& f, const Quadrature& q) {
  require_order(body.dim(), i, true);
  const auto rho = sample(body, q.grid);
  const auto t = sample(intersection_squared(body, i, q), q.grid);
  const double c = fit_residual(t, rho, NormKind::l2, q.grid).c_star;
  std::vector<double> integrand(q.grid.size());
  for (std::size_t k = 0; k < q.grid.size(); ++k) {
    integrand[k] = std::pow(rho[k], i - 1) * f(q.grid.node(k)) * (t[k] - c * rho[k]);
  }
  return i * (i + 1.0) / body.dim() * q.grid.integrate(integrand);
}

PerturbationField witness_perturbation(const StarBody& body, int i, const Quadrature& q) {
  const StarBody t = intersection_squared(body, i, q);
  const double c = fit_residual(sample(t, q.grid), sample(body, q.grid), NormKind::l2, q.grid).c_star;
  return {body.dim(),
          [rt = t.radial_function(), rk = body.radial_function(), c](const Vec& u) { return rt(u) - c * rk(u); },
          Parity::none};
}

FunctionalTrace iterate_intersection(const StarBody& body, int i, int steps, const Quadrature& q,
                                     bool allow_top_order) {
  const int n = body.dim();
  require_order(n, i, allow_top_order);
  if (steps < 0) throw std::invalid_argument("iterate_intersection: steps must be non-negative");
  FunctionalTrace trace("step", {"residual", "sup_distance", "dual_volume"});
  const double start = dual_volume(body, i + 1, q.grid);
  const double ball_radius = std::pow(start / unit_ball_volume(n), 1.0 / (i + 1));

  StarBody current = materialize_for(body, q);
  std::vector<double> rho = sample(current, q.grid);
  for (int step = 0;; ++step) {
    const StarBody ik = intersection_body(current, i, q.subsphere_m, q.rng);
    std::vector<double> t = sample(ik, q.grid);
    require_finite_positive(t, "iterate_intersection step " + std::to_string(step));
    double distance = 0.0;
    for (double r : rho) distance = std::max(distance, std::abs(r - ball_radius));
    trace.add_row(step, {fit_residual(t, rho, NormKind::l2, q.grid).residual_rel, distance,
                         dual_volume(rho, i + 1, q.grid)});
    if (step == steps) break;

    const double lambda = std::pow(start / dual_volume(t, i + 1, q.grid), 1.0 / (i + 1));
    for (double& v : t) v *= lambda;
    require_finite_positive(t, "iterate_intersection step " + std::to_string(step));
    rho = t;
    current = grid_body(q, std::move(t), "iterate");
  }
  return trace;
}

double busemann_bound(int n, int i) {
  return std::pow(unit_ball_volume(n - 1), i + 1) * std::pow(unit_ball_volume(n), 1 - i);
}

double busemann_ratio(const StarBody& body, int i, const Quadrature& q) {
  require_order(body.dim(), i, true);
  const StarBody ik = intersection_body(body, i, q.subsphere_m, q.rng);
  return dual_volume(ik, i + 1, q.grid) / std::pow(dual_volume(body, i + 1, q.grid), i);
}

FunctionalTrace busemann_scan(const std::vector<BodySpec>& bodies, int n, int i, const Quadrature& q) {
  require_order(n, i, false);
  FunctionalTrace trace("body", {"ratio", "bound", "margin"});
  const double bound = busemann_bound(n, i);
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    const double ratio = busemann_ratio(catalog_body(bodies[k], n), i, q);
    trace.add_row(static_cast<double>(k), {ratio, bound, bound - ratio});
  }
  return trace;
}

FunctionalTrace css_monotonicity_trace(const StarBody& body, int i, const Vec& u, const std::vector<double>& t_grid,
                                       int fiber_count, const Quadrature& q, const FiberOptions& options) {
  FunctionalTrace trace("t", {"target", "dual_volume"});
  for (double t : t_grid) {
    const StarBody kt = conjugated_perturbation(body, i, u, t, fiber_count, q.grid, options);
    const StarBody ikt = intersection_body(kt, i, q.subsphere_m, q.rng);
    trace.add_row(t, {dual_volume(ikt, i + 1, q.grid), dual_volume(kt, i + 1, q.grid)});
  }
  return trace;
}

}  // namespace startomo
