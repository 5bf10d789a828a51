#include <cmath>
#include <numbers>

#include "doctest.h"
#include "startomo/harmonics.hpp"
#include "startomo/variational.hpp"

using namespace startomo;

namespace {

constexpr double pi = std::numbers::pi;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

PerturbationField field(std::function<double(const Vec&)> f) { return {3, std::move(f), Parity::none}; }

/// Families with derivatives well away from zero (relative errors are meaningful).
std::vector<PerturbationField> families() {
  return {
      field([](const Vec&) { return 1.0; }),
      field([](const Vec& u) { return 1.0 + 0.5 * real_sph_harm(2, 0, u); }),
      field([](const Vec& u) { return std::exp(0.5 * u[0]); }),
      field([](const Vec& u) { return 1.0 + u[0] * u[1] + 0.3 * u[2]; }),
      field([](const Vec& u) { return 2.0 + real_sph_harm(4, 2, u) + 0.2 * real_sph_harm(3, 1, u); }),
  };
}

}  // namespace

TEST_CASE("functional F") {
  const Quadrature q{SphereGrid::lat_lon(32, 64)};
  const StarBody ball = make_ball(3, 1.0);
  const double scale = pi * pi * 4.0 * pi / 3.0;
  CHECK(std::abs(functional_F(ball, pi * pi, 1, q)) <= 1e-12 * scale);
  CHECK(functional_F(catalog_body(CubeSpec{1.0}, 3), 0.0, 1, q) > 0.0);
  CHECK(functional_F(catalog_body(EllipsoidSpec{{1, 1, 2}}, 3), pi * pi, 1, q) < -1.0);
}

TEST_CASE("derivative formulas at constants") {
  const Quadrature q{SphereGrid::lat_lon(32, 64)};
  const StarBody ball = make_ball(3, 1.0);
  const PerturbationField one = field([](const Vec&) { return 1.0; });
  const PerturbationField zero = field([](const Vec&) { return 0.0; });
  CHECK(dual_volume_derivative(ball, one, 1, q.grid) == doctest::Approx(8.0 * pi / 3.0).epsilon(1e-13));
  CHECK(dual_volume_derivative(ball, zero, 1, q.grid) == 0.0);
  CHECK(intersection_derivative(ball, one, 1, q) == doctest::Approx(8.0 * std::pow(pi, 3) / 3.0).epsilon(1e-12));
  CHECK(intersection_derivative(ball, zero, 1, q) == 0.0);

  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1.2, 1.5}}, 3);
  const PerturbationField odd{3, [](const Vec& u) { return u[0] + u[1] * u[2] * u[2]; }, Parity::odd};
  CHECK(std::abs(dual_volume_derivative(ellipsoid, odd, 1, q.grid)) < 1e-12);
}

TEST_CASE("finite differences match the derivative formulas") {
  const Quadrature q{SphereGrid::lat_lon(48, 96)};
  for (const BodySpec& spec : {BodySpec{BallSpec{1.0}}, BodySpec{EllipsoidSpec{{1, 1.2, 1.5}}},
                               BodySpec{PerturbedBallSpec{1.0, 3, 1, 0.1}}}) {
    const StarBody body = catalog_body(spec, 3);
    for (const auto& f : families()) {
      const DerivativeCheck dv = check_dual_volume_derivative(body, f, 1, 1e-4, q.grid);
      CHECK(dv.rel_error <= 1e-3);
      // Richardson removes the O(h) term of the exactly quadratic functional.
      CHECK(std::abs(dv.richardson - dv.formula) <= 1e-8 * std::abs(dv.formula));
      const DerivativeCheck id = check_intersection_derivative(body, f, 1, 1e-4, q);
      CHECK(id.rel_error <= 1e-3);
    }
  }
}

TEST_CASE("stationarity gap") {
  const Quadrature q{SphereGrid::lat_lon(48, 96)};
  const StarBody ball = make_ball(3, 1.3);
  for (const auto& f : families()) CHECK(std::abs(stationarity_gap(ball, 1, f, q)) <= 1e-8);

  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 1.5}}, 3);
  const PerturbationField witness = witness_perturbation(ellipsoid, 1, q);
  CHECK(stationarity_gap(ellipsoid, 1, witness, q) > 1e-3);

  // Remove the witness component from g in the grid inner product.
  const PerturbationField g = field([](const Vec& u) { return std::exp(0.5 * u[0]) + u[2] * u[2]; });
  double gw = 0.0;
  double ww = 0.0;
  for (std::size_t k = 0; k < q.grid.size(); ++k) {
    const double w = witness(q.grid.node(k));
    gw += q.grid.weight(k) * g(q.grid.node(k)) * w;
    ww += q.grid.weight(k) * w * w;
  }
  const PerturbationField orthogonal =
      field([g, witness, a = gw / ww](const Vec& u) { return g(u) - a * witness(u); });
  CHECK(std::abs(stationarity_gap(ellipsoid, 1, orthogonal, q)) <= 1e-10 * stationarity_gap(ellipsoid, 1, witness, q));
}

TEST_CASE("fixed point residuals") {
  const Quadrature q{SphereGrid::lat_lon(32, 64)};
  for (double r : {1.0, 2.0}) {
    // rho_{I_1 B(r)} = pi r and rho_{I_1^2 B(r)} = pi^2 r: the constant is pi^2 for every r.
    for (NormKind norm : {NormKind::l2, NormKind::sup}) {
      const ResidualReport report = fixed_point_residual(make_ball(3, r), 1, 2, norm, q);
      CHECK(report.c_star == doctest::Approx(pi * pi).epsilon(1e-12));
      CHECK(report.residual_rel <= 1e-12);
      CHECK(report.norm_kind == norm);
    }
  }
  CHECK(fixed_point_residual(make_ball(3, 1.0), 1, 1, NormKind::l2, q).c_star == doctest::Approx(pi).epsilon(1e-13));
  const Quadrature q4{SphereGrid::monte_carlo(4, 500, 3), 64, Rng(5)};
  CHECK(fixed_point_residual(make_ball(4, 1.0), 1, 1, NormKind::l2, q4).c_star ==
        doctest::Approx(unit_ball_volume(3)).epsilon(1e-12));

  double previous = 0.0;
  for (double eps : {0.02, 0.05, 0.1}) {
    const double residual =
        fixed_point_residual(catalog_body(PerturbedBallSpec{1.0, 2, 0, eps}, 3), 1, 2, NormKind::l2, q).residual_rel;
    CHECK(residual > previous);
    previous = residual;
  }

  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1.2, 1.5}}, 3);
  const double base = fixed_point_residual(ellipsoid, 1, 2, NormKind::l2, q).residual_rel;
  CHECK(base > 1e-3);
  CHECK(fixed_point_residual(scale_body(ellipsoid, 1.7), 1, 2, NormKind::l2, q).residual_rel ==
        doctest::Approx(base).epsilon(1e-10));

  CHECK_THROWS_AS(fixed_point_residual(ellipsoid, 2, 2, NormKind::l2, q), std::invalid_argument);
  CHECK_NOTHROW(fixed_point_residual(ellipsoid, 2, 1, NormKind::l2, q, true));
  CHECK_THROWS_AS(fixed_point_residual(ellipsoid, 1, 3, NormKind::l2, q), std::invalid_argument);
}

TEST_CASE("sup-norm fit") {
  const auto grid = SphereGrid::lat_lon(4, 8);
  std::vector<double> body(grid.size(), 1.0);
  std::vector<double> target(grid.size(), 2.0);
  target[0] = 4.0;
  // max |T - c| over {2, 4} is minimized at c = 3 with value 1.
  const ResidualReport report = fit_residual(target, body, NormKind::sup, grid);
  CHECK(report.c_star == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(report.residual_rel == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("iterated intersection bodies") {
  const Quadrature q{SphereGrid::lat_lon(32, 64)};
  const FunctionalTrace ball = iterate_intersection(make_ball(3, 1.4), 1, 3, q);
  REQUIRE(ball.size() == 4);
  for (std::size_t s = 0; s < ball.size(); ++s) {
    CHECK(ball.value(s, "residual") <= 1e-12);
    CHECK(ball.value(s, "sup_distance") <= 1e-12);
  }

  const FunctionalTrace bump = iterate_intersection(catalog_body(PerturbedBallSpec{1.0, 2, 0, 0.1}, 3), 1, 10, q);
  const auto distance = bump.column("sup_distance");
  CHECK(distance.back() < distance.front());
  CHECK(distance[3] < 0.2 * distance[0]);
  const auto volume = bump.column("dual_volume");
  for (double v : volume) CHECK(v == doctest::Approx(volume.front()).epsilon(1e-12));

  const Quadrature q4{SphereGrid::monte_carlo(4, 600, 11), 64, Rng(2)};
  const FunctionalTrace ell4 = iterate_intersection(catalog_body(EllipsoidSpec{{1, 1, 1, 1.3}}, 4), 2, 3, q4);
  const auto residual = ell4.column("residual");
  CHECK(residual.back() < residual.front());
}

TEST_CASE("Busemann-type ratio") {
  const Quadrature q{SphereGrid::lat_lon(48, 96)};
  CHECK(busemann_bound(3, 1) == doctest::Approx(pi * pi).epsilon(1e-15));
  for (double r : {0.7, 1.9}) {
    CHECK(busemann_ratio(make_ball(3, r), 1, q) == doctest::Approx(pi * pi).epsilon(1e-12));
  }
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 2}}, 3);
  const double ratio = busemann_ratio(ellipsoid, 1, q);
  CHECK(pi * pi - ratio > 1e-2);
  CHECK(busemann_ratio(scale_body(ellipsoid, 2.3), 1, q) == doctest::Approx(ratio).epsilon(1e-10));

  const FunctionalTrace scan =
      busemann_scan({BallSpec{1.0}, CubeSpec{1.0}, ShiftedBallSpec{{0.2, 0, 0}, 1.0}}, 3, 1, q);
  REQUIRE(scan.size() == 3);
  CHECK(std::abs(scan.value(0, "margin")) <= 1e-10);
  CHECK(scan.value(1, "margin") > 1e-3);
  CHECK(scan.value(2, "margin") > 1e-3);
}

TEST_CASE("target functional grows along the conjugated perturbation") {
  const Quadrature q{SphereGrid::lat_lon(24, 48)};
  const StarBody shifted = catalog_body(ShiftedBallSpec{{0, 0, 0.3}, 1.0}, 3);
  const FunctionalTrace trace = css_monotonicity_trace(shifted, 1, vec({0, 0, 1}), {0.0, 0.5, 1.0}, 128, q);
  const auto target = trace.column("target");
  CHECK(target[1] > target[0] * (1.0 + 1e-3));
  CHECK(target[2] > target[1] * (1.0 + 1e-3));
  const double v2 = dual_volume(shifted, 2, q.grid);
  for (double v : trace.column("dual_volume")) CHECK(v == doctest::Approx(v2).epsilon(2e-3));

  const FunctionalTrace flat = css_monotonicity_trace(make_ball(3, 1.0), 1, vec({0, 0, 1}), {0.0, 1.0}, 64, q);
  CHECK(flat.value(0, "target") == flat.value(1, "target"));
}
