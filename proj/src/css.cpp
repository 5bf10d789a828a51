#include "startomo/css.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "startomo/parallel.hpp"

namespace startomo {

namespace {

constexpr double kEmptyFiberLength = 1e-8;
constexpr int kRayScan = 64;
constexpr int kStarRays = 64;

void require_dim3(const StarBody& body, const Vec& u) {
  if (body.dim() != 3 || u.size() != 3) throw std::invalid_argument("css: only n = 3 is supported");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw std::invalid_argument("css: direction must be a unit vector");
}

void require_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("css: t must lie in [0, 1]");
}

/// Fiber table over a FiberGrid plus the membership oracle of S^t_u K.
class SymmetrizedFibers {
 public:
  SymmetrizedFibers(const StarBody& body, const FiberGrid& fibers, double t, const FiberOptions& options)
      : body_(body), fibers_(fibers), t_(t), options_(options) {
    const int count = fibers_.count();
    table_.resize(static_cast<std::size_t>(count) * count);
    parallel_for(table_.size(), [&](std::size_t k) {
      const int a = static_cast<int>(k / count);
      const int b = static_cast<int>(k % count);
      table_[k] = exact(fibers_.node(a, b));
    });
  }

  IntervalUnion exact(const Vec& y) const {
    return css_1d(fiber_intervals(body_, fibers_.direction(), y, options_), t_);
  }

  bool contains(const Vec& x) const {
    const Vec& u = fibers_.direction();
    const double s = x.dot(u);
    const Vec y = x - s * u;
    const int count = fibers_.count();
    if (count < 2) return exact(y).contains(s);
    const double a = fibers_.coordinate(y, 0);
    const double b = fibers_.coordinate(y, 1);
    if (!(a >= 0.0 && b >= 0.0 && a <= count - 1 && b <= count - 1)) return exact(y).contains(s);
    const int ia = std::min(static_cast<int>(a), count - 2);
    const int ib = std::min(static_cast<int>(b), count - 2);
    const double fa = a - ia;
    const double fb = b - ib;
    const IntervalUnion* corner[4] = {&at(ia, ib), &at(ia + 1, ib), &at(ia, ib + 1), &at(ia + 1, ib + 1)};
    const double weight[4] = {(1 - fa) * (1 - fb), fa * (1 - fb), (1 - fa) * fb, fa * fb};
    const std::size_t pieces = corner[0]->size();
    bool same = true;
    for (int c = 1; c < 4; ++c) same = same && corner[c]->size() == pieces;
    if (!same) return exact(y).contains(s);
    if (pieces == 0) return false;
    // Centers and squared half-lengths are smooth up to the silhouette, where
    // the endpoints themselves have a square-root singularity.
    for (std::size_t k = 0; k < pieces; ++k) {
      double center = 0.0;
      double half2 = 0.0;
      for (int c = 0; c < 4; ++c) {
        const Interval& iv = corner[c]->intervals()[k];
        center += weight[c] * 0.5 * (iv.lo + iv.hi);
        half2 += weight[c] * 0.25 * iv.length() * iv.length();
      }
      if ((s - center) * (s - center) <= half2) return true;
    }
    return false;
  }

  /// Outermost membership transition along the ray r v, r in (0, reach].
  double radius(const Vec& v, double reach) const {
    double lo = 0.0;
    double hi = reach;
    for (int k = kRayScan; k >= 1; --k) {
      const double r = reach * k / kRayScan;
      if (contains(r * v)) {
        lo = r;
        hi = (k == kRayScan) ? reach : reach * (k + 1) / kRayScan;
        break;
      }
    }
    if (lo == reach) return reach;
    while (hi - lo > options_.tol) {
      const double mid = 0.5 * (lo + hi);
      (contains(mid * v) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  const IntervalUnion& at(int a, int b) const { return table_[static_cast<std::size_t>(a) * fibers_.count() + b]; }

  const StarBody& body_;
  const FiberGrid& fibers_;
  double t_;
  FiberOptions options_;
  std::vector<IntervalUnion> table_;
};

}  // namespace

FiberGrid::FiberGrid(const Vec& u, double extent, int count) : u_(u), extent_(extent), count_(count) {
  if (u.size() != 3) throw std::invalid_argument("FiberGrid: only n = 3 is supported");
  if (count == 1 || count < 0) throw std::invalid_argument("FiberGrid: count must be 0 or at least 2");
  if (!(extent > 0.0)) throw std::invalid_argument("FiberGrid: extent must be positive");
  const auto basis = complement_basis(u);
  basis_ = {basis[0], basis[1]};
}

FiberGrid FiberGrid::covering(const StarBody& body, const Vec& u, int count) {
  return FiberGrid(u, body.max_radius(), count);
}

double FiberGrid::spacing() const { return count_ >= 2 ? 2.0 * extent_ / (count_ - 1) : 0.0; }

Vec FiberGrid::node(int a, int b) const {
  const double h = spacing();
  return (-extent_ + a * h) * basis_[0] + (-extent_ + b * h) * basis_[1];
}

double FiberGrid::coordinate(const Vec& y, int k) const { return (y.dot(basis_[k]) + extent_) / spacing(); }

IntervalUnion fiber_intervals(const StarBody& body, const Vec& u, const Vec& y, const FiberOptions& options) {
  require_dim3(body, u);
  if (options.s_grid < 2 || !(options.tol > 0.0)) throw std::invalid_argument("fiber_intervals: bad options");
  if (std::abs(y.dot(u)) > 1e-12 * std::max(1.0, y.norm())) {
    throw std::invalid_argument("fiber_intervals: y must be orthogonal to u");
  }
  const double reach = body.max_radius() * (1.0 + 1e-9);
  const double y2 = y.squaredNorm();
  if (y2 >= reach * reach) return {};
  const double half = std::sqrt(reach * reach - y2);

  // g <= 0 exactly on the fiber; both chord ends lie outside K.
  auto g = [&](double s) {
    const Vec x = y + s * u;
    const double r = x.norm();
    if (r == 0.0) return -1.0;
    return r - body.radial(x / r);
  };

  auto refine = [&](double inside, double outside) {
    while (std::abs(outside - inside) > options.tol) {
      const double mid = 0.5 * (inside + outside);
      (g(mid) <= 0.0 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };

  const int count = options.s_grid;
  std::vector<Interval> found;
  double prev_s = -half;
  bool prev_in = g(prev_s) <= 0.0;
  double enter = prev_in ? -half : 0.0;
  for (int j = 1; j < count; ++j) {
    const double s = -half + 2.0 * half * j / (count - 1);
    const bool in = g(s) <= 0.0;
    if (in && !prev_in) enter = refine(s, prev_s);
    if (!in && prev_in) {
      const double leave = refine(prev_s, s);
      if (leave - enter >= options.tol) found.push_back({enter, leave});
    }
    prev_s = s;
    prev_in = in;
  }
  if (prev_in && half - enter >= options.tol) found.push_back({enter, half});

  IntervalUnion out(std::move(found));
  if (out.total_length() < kEmptyFiberLength) return {};
  return out;
}

CssResult css_flow(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                   const FiberOptions& options) {
  require_dim3(body, u);
  require_time(t);
  if (!grid.is_lat_lon()) throw std::invalid_argument("css: needs a lat-lon sphere grid");
  if ((fibers.direction() - u).norm() > 1e-12) throw std::invalid_argument("css: fiber grid built for another direction");

  const SymmetrizedFibers oracle(body, fibers, t, options);
  // CSS is monotone under inclusion and fixes the circumscribed ball.
  const double reach = body.max_radius() * (1.0 + 1e-9);

  std::vector<double> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) { values[k] = oracle.radius(grid.node(k), reach); });

  CssResult result{from_grid_values(grid, std::move(values), "css(" + body.label() + ")")};
  Rng rays(hash_direction(u), 0x57a25ULL);
  for (int k = 0; k < kStarRays; ++k) {
    const Vec v = sample_sphere(rays, 3);
    const double rho = oracle.radius(v, reach);
    bool ok = true;
    for (int j = 1; j < 32 && ok; ++j) ok = oracle.contains((rho * j / 32.0) * v);
    for (int j = 1; j <= 16 && ok; ++j) {
      const double r = rho + (reach - rho) * j / 16.0;
      if (r > rho + 1e-6) ok = !oracle.contains(r * v);
    }
    ++result.rays_checked;
    if (!ok) ++result.ray_violations;
  }
  return result;
}

StarBody css_body(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                  const FiberOptions& options) {
  CssResult result = css_flow(body, u, t, fibers, grid, options);
  if (result.ray_violations > 0) {
    throw std::runtime_error("css_body: symmetrized body failed the star-shapedness check on " +
                             std::to_string(result.ray_violations) + " of " + std::to_string(result.rays_checked) +
                             " rays");
  }
  return std::move(result.body);
}

double volume_drift(const StarBody& body, const Vec& u, double t, const FiberGrid& fibers, const SphereGrid& grid,
                    const FiberOptions& options) {
  const double before = dual_volume(body, 3, grid);
  const double after = dual_volume(css_body(body, u, t, fibers, grid, options), 3, grid);
  return std::abs(after - before) / before;
}

StarBody conjugated_perturbation(const StarBody& body, int i, const Vec& u, double t, int fiber_count,
                                 const SphereGrid& grid, const FiberOptions& options) {
  require_dim3(body, u);
  if (i != 1) throw std::invalid_argument("conjugated_perturbation: needs 1 <= i <= n-2");
  const double q = (i + 1) / 3.0;
  const StarBody inner = power_body(body, q);
  const StarBody moved = css_body(inner, u, t, FiberGrid::covering(inner, u, fiber_count), grid, options);
  return power_body(moved, 1.0 / q);
}

FunctionalTrace iterate_steiner(const StarBody& body, Rng rng, const SphereGrid& grid, const SteinerOptions& options) {
  if (body.dim() != 3) throw std::invalid_argument("iterate_steiner: only n = 3 is supported");
  FunctionalTrace trace("step", {"direction_x", "direction_y", "direction_z", "sup_distance", "volume_drift"});
  const StarBody target = equivalent_ball(body, grid);
  const double volume = dual_volume(body, 3, grid);

  StarBody current = materialize(body, grid);
  double distance = sup_distance(current, target, grid);
  trace.add_row(0, {0.0, 0.0, 0.0, distance, 0.0});
  for (int step = 1; step <= options.max_steps && distance > options.stop_dist; ++step) {
    const Vec u = sample_sphere(rng, 3);
    current = css_body(current, u, 1.0, FiberGrid::covering(current, u, options.fiber_count), grid, options.fiber);
    distance = sup_distance(current, target, grid);
    const double drift = std::abs(dual_volume(current, 3, grid) - volume) / volume;
    trace.add_row(step, {u[0], u[1], u[2], distance, drift});
  }
  return trace;
}

}  // namespace startomo
