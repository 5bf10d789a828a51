#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>

#include "doctest.h"
#include "startomo/css.hpp"

using namespace startomo;
using Q = boost::multiprecision::cpp_rational;
using QUnion = BasicIntervalUnion<Q>;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

QUnion qunion(std::initializer_list<std::pair<Q, Q>> parts) {
  std::vector<BasicInterval<Q>> out;
  for (const auto& [lo, hi] : parts) out.push_back({lo, hi});
  return QUnion(out);
}

/// Smallest positive contact time of neighbours in J (1 if none).
Q first_contact(const QUnion& set) {
  Q tau = 1;
  const auto& iv = set.intervals();
  for (std::size_t k = 0; k + 1 < iv.size(); ++k) {
    const Q gap_centers = (iv[k + 1].lo + iv[k + 1].hi - iv[k].lo - iv[k].hi) / 2;
    const Q s = 1 - (iv[k].length() + iv[k + 1].length()) / 2 / gap_centers;
    if (s < tau) tau = s;
  }
  return tau;
}

}  // namespace

TEST_CASE("interval union normalizes its input") {
  const IntervalUnion u({{2, 3}, {0, 1}, {1, 1.5}, {2.5, 4}});
  REQUIRE(u.size() == 2);
  CHECK(u.intervals()[0] == Interval{0, 1.5});
  CHECK(u.intervals()[1] == Interval{2, 4});
  CHECK(u.total_length() == 3.5);
  CHECK_THROWS_AS(IntervalUnion({{1, 0}}), std::invalid_argument);
}

TEST_CASE("css_1d exact examples") {
  CHECK(css_1d(qunion({{1, 3}}), Q(1, 2)) == qunion({{0, 2}}));

  const QUnion two = qunion({{-3, -1}, {2, 4}});
  CHECK(first_contact(two) == Q(3, 5));
  CHECK(css_1d(two, Q(3, 5)) == qunion({{Q(-9, 5), Q(11, 5)}}));
  CHECK(css_1d(two, Q(1)) == qunion({{-2, 2}}));
  CHECK(css_1d(two, Q(1, 2)) == qunion({{-2, 0}, {Q(1, 2), Q(5, 2)}}));

  CHECK_THROWS_AS(css_1d(two, Q(-1, 10)), std::invalid_argument);
  CHECK_THROWS_AS(css_1d(two, Q(11, 10)), std::invalid_argument);

  // Floating-point version agrees to rounding.
  const auto fp = css_1d(IntervalUnion({{-3, -1}, {2, 4}}), 0.6);
  REQUIRE(fp.size() == 1);
  CHECK(fp.intervals()[0].lo == doctest::Approx(-1.8).epsilon(1e-14));
  CHECK(fp.intervals()[0].hi == doctest::Approx(2.2).epsilon(1e-14));
}

TEST_CASE("css_1d invariants on random rational unions") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BasicInterval<Q>> parts;
    Q cursor(static_cast<int>(rng.next_u64() % 21) - 10);
    const int pieces = 1 + static_cast<int>(rng.next_u64() % 5);
    for (int k = 0; k < pieces; ++k) {
      const Q len(1 + static_cast<int>(rng.next_u64() % 6), 1 + static_cast<int>(rng.next_u64() % 4));
      const Q gap(1 + static_cast<int>(rng.next_u64() % 5), 1 + static_cast<int>(rng.next_u64() % 3));
      parts.push_back({cursor, cursor + len});
      cursor += len + gap;
    }
    const QUnion set(parts);
    const Q total = set.total_length();

    std::size_t previous = set.size();
    for (int k = 0; k <= 10; ++k) {
      const QUnion moved = css_1d(set, Q(k, 10));
      CHECK(moved.total_length() == total);
      CHECK(moved.size() <= previous);
      previous = moved.size();
    }
    CHECK(css_1d(set, Q(1)) == qunion({{-total / 2, total / 2}}));
    CHECK(css_1d(set, Q(0)) == set);

    // Semigroup property at the first collision time.
    const Q tau = first_contact(set);
    if (tau < 1) {
      const QUnion at_tau = css_1d(set, tau);
      for (const Q& t : std::vector<Q>{tau, Q((tau + 1) / 2), Q((3 * tau + 1) / 4), Q(1)}) {
        CHECK(css_1d(at_tau, Q((t - tau) / (1 - tau))) == css_1d(set, t));
      }
    }
  }

  const QUnion symmetric = qunion({{Q(-7, 3), Q(7, 3)}});
  for (int k = 0; k <= 4; ++k) CHECK(css_1d(symmetric, Q(k, 4)) == symmetric);
}

TEST_CASE("fiber extraction") {
  const Vec e3 = vec({0, 0, 1});
  const StarBody ball = make_ball(3, 1.0);
  const IntervalUnion chord = fiber_intervals(ball, e3, vec({0.6, 0, 0}));
  REQUIRE(chord.size() == 1);
  CHECK(chord.intervals()[0].lo == doctest::Approx(-0.8).epsilon(1e-9));
  CHECK(chord.intervals()[0].hi == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(fiber_intervals(ball, e3, vec({1.2, 0, 0})).empty());

  const StarBody shifted = catalog_body(ShiftedBallSpec{{0, 0, 0.3}, 1.0}, 3);
  const IntervalUnion through = fiber_intervals(shifted, e3, vec({0, 0, 0}));
  REQUIRE(through.size() == 1);
  CHECK(std::abs(through.intervals()[0].lo + 0.7) < 1e-9);
  CHECK(std::abs(through.intervals()[0].hi - 1.3) < 1e-9);

  // A radial function with two lobes along e_3 gives two intervals off-axis.
  const StarBody dumbbell(3, BodyKind::operator_derived,
                          [](const Vec& u) { return 0.3 + 1.2 * u[2] * u[2]; }, {0.3, 1.5}, "dumbbell");
  const IntervalUnion split = fiber_intervals(dumbbell, e3, vec({0.5, 0, 0}));
  CHECK(split.size() == 2);
  CHECK(split.intervals()[0].lo == doctest::Approx(-split.intervals()[1].hi).epsilon(1e-9));

  CHECK_THROWS_AS(fiber_intervals(ball, e3, vec({0.1, 0, 0.1})), std::invalid_argument);
  CHECK_THROWS_AS(fiber_intervals(make_ball(4, 1.0), vec({0, 0, 0, 1}), vec({0, 0, 0, 0})), std::invalid_argument);
}

TEST_CASE("fiber grid geometry") {
  const Vec u = vec({1, 2, 2}) / 3.0;
  const FiberGrid fibers(u, 1.5, 11);
  CHECK(fibers.spacing() == doctest::Approx(0.3));
  for (int a = 0; a < 11; a += 3) {
    for (int b = 0; b < 11; b += 4) {
      const Vec y = fibers.node(a, b);
      CHECK(std::abs(y.dot(u)) < 1e-12);
      CHECK(fibers.coordinate(y, 0) == doctest::Approx(a).epsilon(1e-12));
      CHECK(fibers.coordinate(y, 1) == doctest::Approx(b).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(FiberGrid(u, 1.0, 1), std::invalid_argument);
}

TEST_CASE("css of balls and shifted balls") {
  const auto grid = SphereGrid::lat_lon(12, 24);
  const Vec u = vec({0.48, 0.6, 0.64});
  const StarBody ball = make_ball(3, 1.2);

  // Exact fibers everywhere: node-wise error at the fiber tolerance.
  const FiberGrid exact_mode(u, ball.max_radius(), 0);
  for (double t : {0.0, 0.4, 1.0}) {
    const auto values = sample(css_body(ball, u, t, exact_mode, grid), grid);
    for (double v : values) CHECK(std::abs(v - 1.2) <= 1e-9);
  }

  // Lattice interpolation: second order in the lattice spacing.
  const auto lattice_values = sample(css_body(ball, u, 0.5, FiberGrid::covering(ball, u, 128), grid), grid);
  for (double v : lattice_values) CHECK(std::abs(v - 1.2) <= 1e-3);

  const StarBody shifted = catalog_body(ShiftedBallSpec{{0, 0, 0.3}, 1.0}, 3);
  const Vec e3 = vec({0, 0, 1});
  const StarBody symmetral = css_body(shifted, e3, 1.0, FiberGrid::covering(shifted, e3, 256), grid);
  CHECK(sup_distance(symmetral, make_ball(3, 1.0), grid) <= 2e-3);
  CHECK_THROWS_AS(css_body(shifted, e3, 1.5, FiberGrid::covering(shifted, e3, 16), grid), std::invalid_argument);
}

TEST_CASE("css at t = 0 reproduces the body") {
  const auto grid = SphereGrid::lat_lon(16, 32);
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1.2, 1.5}}, 3);
  const Vec u = vec({0.6, 0, 0.8});
  const StarBody same = css_body(ellipsoid, u, 0.0, FiberGrid::covering(ellipsoid, u, 256), grid);
  CHECK(sup_distance(same, ellipsoid, grid) <= 2e-3);
}

TEST_CASE("full symmetrization is even along u") {
  const auto grid = SphereGrid::lat_lon(16, 32);
  const StarBody body = catalog_body(ShiftedBallSpec{{0.2, -0.1, 0.25}, 1.0}, 3);
  const Vec u = vec({0, 0.6, 0.8});
  const StarBody symmetral = css_body(body, u, 1.0, FiberGrid::covering(body, u, 128), grid);
  // Reflection in u^perp maps the symmetral to itself.
  for (std::size_t k = 0; k < grid.size(); k += 5) {
    const Vec& v = grid.node(k);
    const Vec reflected = v - 2.0 * v.dot(u) * u;
    CHECK(symmetral.radial(v) == doctest::Approx(symmetral.radial(reflected)).epsilon(2e-2));
  }
}

TEST_CASE("volume drift") {
  const auto grid = SphereGrid::lat_lon(32, 64);
  const StarBody ball = make_ball(3, 1.0);
  const Vec e1 = vec({1, 0, 0});
  CHECK(volume_drift(ball, e1, 0.3, FiberGrid(e1, 1.0, 0), grid, {kDefaultSGrid, 1e-14}) <= 1e-12);

  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 2}}, 3);
  CHECK(volume_drift(ellipsoid, e1, 0.7, FiberGrid::covering(ellipsoid, e1, 256), grid) <= 1e-3);
}

TEST_CASE("conjugated perturbation keeps the dual volume") {
  const auto grid = SphereGrid::lat_lon(32, 64);
  const StarBody ball = make_ball(3, 1.0);
  const Vec u = vec({0, 0.6, 0.8});
  const StarBody ball_t = conjugated_perturbation(ball, 1, u, 0.5, 128, grid);
  CHECK(sup_distance(ball_t, ball, grid) <= 1e-3);

  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 1.5}}, 3);
  const Vec oblique = vec({1, 0, 1}) / std::sqrt(2.0);
  const StarBody moved = conjugated_perturbation(ellipsoid, 1, oblique, 1.0, 256, grid);
  const double before = dual_volume(ellipsoid, 2, grid);
  CHECK(std::abs(dual_volume(moved, 2, grid) - before) <= 1e-3 * before);
  CHECK_THROWS_AS(conjugated_perturbation(ellipsoid, 2, oblique, 0.5, 64, grid), std::invalid_argument);
}

TEST_CASE("iterated Steiner symmetrization") {
  const auto grid = SphereGrid::lat_lon(32, 64);
  const FunctionalTrace ball_trace = iterate_steiner(make_ball(3, 1.0), Rng(1), grid);
  REQUIRE(ball_trace.size() == 1);
  CHECK(ball_trace.value(0, "sup_distance") <= 1e-12);

  SteinerOptions options;
  options.max_steps = 6;
  options.stop_dist = 0.0;
  const StarBody ellipsoid = catalog_body(EllipsoidSpec{{1, 1, 1.5}}, 3);
  const FunctionalTrace trace = iterate_steiner(ellipsoid, Rng(3), grid, options);
  CHECK(trace.size() == 7);
  const auto distance = trace.column("sup_distance");
  CHECK(distance.back() < 0.6 * distance.front());
  for (double drift : trace.column("volume_drift")) CHECK(drift <= 5e-3);
  CHECK(trace.to_csv().rfind("step,direction_x,direction_y,direction_z,sup_distance,volume_drift\n", 0) == 0);
}
