#include <cmath>
#include <numbers>

#include "doctest.h"
#include "startomo/harmonics.hpp"
#include "startomo/star_body.hpp"

using namespace startomo;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

constexpr double pi = std::numbers::pi;

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
  const auto rule = gauss_legendre_rule(4);
  // Tabulated 4-point abscissae.
  CHECK(rule.nodes[0] == doctest::Approx(-0.8611363115940526).epsilon(1e-15));
  CHECK(rule.nodes[1] == doctest::Approx(-0.3399810435848563).epsilon(1e-15));
  CHECK(rule.nodes[3] == -rule.nodes[0]);

  for (int count : {1, 5, 16, 64, 128}) {
    const auto r = gauss_legendre_rule(count);
    for (int power = 0; power <= 2 * count - 1; power += 2) {
      double sum = 0.0;
      for (int k = 0; k < count; ++k) sum += r.weights[k] * std::pow(r.nodes[k], power);
      CHECK(sum == doctest::Approx(2.0 / (power + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("lat-lon sphere grid") {
  const auto grid = SphereGrid::lat_lon(32, 64);
  double total = 0.0;
  double z2 = 0.0;
  double x2y2 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec& u = grid.node(k);
    CHECK(std::abs(u.norm() - 1.0) < 1e-15);
    total += grid.weight(k);
    z2 += grid.weight(k) * u[2] * u[2];
    x2y2 += grid.weight(k) * u[0] * u[0] * u[1] * u[1];
    CHECK(grid.node(grid.antipode(k)) == Vec(-u));
  }
  CHECK(std::abs(total - 4.0 * pi) < 1e-8);
  CHECK(z2 == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-13));
  CHECK(x2y2 == doctest::Approx(4.0 * pi / 15.0).epsilon(1e-13));
  CHECK(grid.find_node(grid.node(77)).value() == 77);

  const auto mc = SphereGrid::monte_carlo(5, 1000, 9);
  double mc_total = 0.0;
  for (double w : mc.weights()) mc_total += w;
  CHECK(mc_total == doctest::Approx(5 * unit_ball_volume(5)).epsilon(1e-13));
  CHECK(SphereGrid::monte_carlo(5, 1000, 9).node(3) == mc.node(3));
}

TEST_CASE("catalog bodies") {
  const Vec e1 = vec({1, 0, 0});
  const Vec e3 = vec({0, 0, 1});
  CHECK(catalog_body(BallSpec{2.0}, 3).radial(e1) == 2.0);
  CHECK(catalog_body(EllipsoidSpec{{1, 1, 2}}, 3).radial(e3) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(catalog_body(ShiftedBallSpec{{0.3, 0, 0}, 1.0}, 3).radial(e1) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(catalog_body(CubeSpec{1.0}, 3).radial(vec({1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)})) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  const StarBody bump = catalog_body(PerturbedBallSpec{1.0, 2, 0, 0.1}, 3);
  CHECK(bump.radial(e3) == doctest::Approx(1.0 + 0.1 * std::sqrt(5.0 / (4.0 * pi))).epsilon(1e-14));

  CHECK_THROWS_AS(catalog_body(ShiftedBallSpec{{1.2, 0, 0}, 1.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(catalog_body(BallSpec{-1.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(catalog_body(EllipsoidSpec{{1, 1}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(catalog_body(PerturbedBallSpec{1.0, 2, 0, 5.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(catalog_body(PerturbedBallSpec{1.0, 2, 0, 0.1}, 4), std::invalid_argument);
}

TEST_CASE("power bodies") {
  const auto grid = SphereGrid::lat_lon(16, 32);
  const StarBody ball = make_ball(3, 1.7);
  CHECK(power_body(ball, 2.5).radial(grid.node(0)) == doctest::Approx(std::pow(1.7, 2.5)).epsilon(1e-15));

  const StarBody k = catalog_body(ShiftedBallSpec{{0.1, -0.2, 0.3}, 1.1}, 3);
  const auto base = sample(k, grid);
  const auto same = sample(power_body(k, 1.0), grid);
  const auto round_trip = sample(power_body(power_body(k, 2.0 / 3.0), 1.5), grid);
  const auto composed = sample(power_body(power_body(k, 0.7), -1.3), grid);
  const auto direct = sample(power_body(k, 0.7 * -1.3), grid);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    CHECK(same[n] == base[n]);
    CHECK(std::abs(round_trip[n] - base[n]) <= 1e-12 * base[n]);
    CHECK(std::abs(composed[n] - direct[n]) <= 1e-12 * direct[n]);
  }
  CHECK_THROWS_AS(power_body(k, 0.0), std::invalid_argument);
}

TEST_CASE("dual volumes") {
  const auto grid = SphereGrid::lat_lon(128, 256);
  const double r = 1.3;
  CHECK(dual_volume(make_ball(3, r), 2, grid) == doctest::Approx(r * r * 4.0 * pi / 3.0).epsilon(1e-12));
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 2}}, 3);
  CHECK(dual_volume(ellipsoid, 3, grid) == doctest::Approx(8.0 * pi / 3.0).epsilon(1e-10));
  CHECK(dual_volume(ellipsoid, 0, grid) == doctest::Approx(unit_ball_volume(3)).epsilon(1e-12));

  // Homogeneity and monotonicity.
  const StarBody k = catalog_body(PerturbedBallSpec{1.0, 3, 1, 0.2}, 3);
  for (double i : {1.0, 2.0, 3.0, 4.5}) {
    const double lambda = 1.7;
    CHECK(dual_volume(scale_body(k, lambda), i, grid) ==
          doctest::Approx(std::pow(lambda, i) * dual_volume(k, i, grid)).epsilon(1e-12));
    CHECK(dual_volume(k, i, grid) <= dual_volume(scale_body(k, 1.0001), i, grid));
  }

  // V~_{i+1}(K) equals the volume of <K^{(i+1)/n}>.
  for (const BodySpec& spec : {BodySpec{EllipsoidSpec{{1, 1.2, 1.5}}}, BodySpec{ShiftedBallSpec{{0, 0, 0.3}, 1}},
                               BodySpec{PerturbedBallSpec{1.0, 2, 0, 0.1}}}) {
    const StarBody body = catalog_body(spec, 3);
    const double lhs = dual_volume(body, 2, grid);
    const double rhs = dual_volume(power_body(body, 2.0 / 3.0), 3, grid);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * lhs);
  }

  // Cube of half-width 1 has volume 8 (kinked: slower quadrature convergence).
  CHECK(dual_volume(catalog_body(CubeSpec{1.0}, 3), 3, grid) == doctest::Approx(8.0).epsilon(1e-3));
}

TEST_CASE("sup distance and equivalent ball") {
  const auto grid = SphereGrid::lat_lon(64, 128);
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 2}}, 3);
  CHECK(sup_distance(ellipsoid, ellipsoid, grid) == 0.0);
  CHECK(sup_distance(make_ball(3, 1.0), make_ball(3, 1.5), grid) == doctest::Approx(0.5));
  // The maximum sits at the poles; the nearest Gauss-Legendre row is at colatitude ~0.037.
  CHECK(sup_distance(ellipsoid, make_ball(3, 1.0), grid) == doctest::Approx(1.0).epsilon(1e-2));

  const auto g128 = SphereGrid::lat_lon(128, 256);
  CHECK(equivalent_ball(make_ball(3, 1.4), g128).radial(grid.node(0)) == doctest::Approx(1.4).epsilon(1e-13));
  CHECK(equivalent_ball(ellipsoid, g128).radial(grid.node(0)) == doctest::Approx(std::cbrt(2.0)).epsilon(1e-10));
  CHECK(equivalent_ball(catalog_body(CubeSpec{1.0}, 3), g128).radial(grid.node(0)) ==
        doctest::Approx(std::cbrt(6.0 / pi)).epsilon(1e-4));
}

TEST_CASE("materialization") {
  const auto grid = SphereGrid::lat_lon(32, 64);
  const StarBody ball = materialize(make_ball(3, 1.25), grid);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) CHECK(ball.radial(sample_sphere(rng, 3)) == doctest::Approx(1.25).epsilon(1e-15));

  const StarBody bump = catalog_body(PerturbedBallSpec{1.0, 2, 1, 0.2}, 3);
  const StarBody grid_bump = materialize(bump, grid);
  const auto exact = sample(bump, grid);
  const auto cached = sample(grid_bump, grid);
  const auto again = sample(materialize(grid_bump, grid), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(cached[k] == exact[k]);
    CHECK(again[k] == exact[k]);
    CHECK(grid_bump.radial(grid.node(k)) == exact[k]);
  }

  // Second-order convergence of off-node interpolation.
  auto max_error = [&](int nlat) {
    const auto g = SphereGrid::lat_lon(nlat, 2 * nlat);
    const StarBody interp = materialize(bump, g);
    Rng probe(17);
    double err = 0.0;
    for (int k = 0; k < 4000; ++k) {
      const Vec u = sample_sphere(probe, 3);
      err = std::max(err, std::abs(interp.radial(u) - bump.radial(u)));
    }
    return err;
  };
  const double coarse = max_error(64);
  const double fine = max_error(128);
  CHECK(fine < 2e-4);
  CHECK(coarse / fine > 3.0);

  const auto mc = SphereGrid::monte_carlo(4, 64, 1);
  const StarBody cached4 = materialize(catalog_body(EllipsoidSpec{{1, 1, 1, 1.3}}, 4), mc);
  CHECK(cached4.radial(mc.node(5)) > 0.0);
  Vec off = vec({1, 0, 0, 0});
  CHECK_THROWS_AS(cached4.radial(off), std::domain_error);
}

TEST_CASE("scattered interpolation on Monte Carlo grids") {
  const auto grid = SphereGrid::monte_carlo(4, 2000, 4);
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 1, 1.3}}, 4);
  const StarBody fitted = scattered_interpolant(grid, sample(ellipsoid, grid));
  CHECK(fitted.radial(grid.node(17)) == ellipsoid.radial(grid.node(17)));
  Rng probe(8);
  double err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vec u = sample_sphere(probe, 4);
    err = std::max(err, std::abs(fitted.radial(u) - ellipsoid.radial(u)));
  }
  CHECK(err < 0.01);
  CHECK_THROWS_AS(scattered_interpolant(grid, sample(ellipsoid, grid), 3), std::invalid_argument);
}
