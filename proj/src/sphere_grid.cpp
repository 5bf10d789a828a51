#include "startomo/sphere_grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace startomo {
namespace {

std::uint64_t next_grid_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

void build_index(SphereGridData& d) {
  d.index.reserve(d.nodes.size());
  for (std::size_t k = 0; k < d.nodes.size(); ++k) d.index.emplace_back(hash_direction(d.nodes[k]), k);
  std::sort(d.index.begin(), d.index.end());
}

}  // namespace

GaussLegendreRule gauss_legendre_rule(int count) {
  if (count < 1) throw std::invalid_argument("gauss_legendre_rule: count must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.assign(count, 0.0);
  rule.weights.assign(count, 0.0);
  const int half = (count + 1) / 2;
  for (int k = 0; k < half; ++k) {
    // Newton iteration on P_count from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (k + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= count; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (count == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    if (count % 2 == 1 && k == half - 1) x = 0.0;
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int j = 2; j <= count; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = count == 1 ? 1.0 : count * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k] = -x;
    rule.nodes[count - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[count - 1 - k] = w;
  }
  return rule;
}

SphereGrid SphereGrid::lat_lon(int nlat, int nlon) {
  if (nlat < 2 || nlon < 4 || nlon % 2 != 0) {
    throw std::invalid_argument("SphereGrid::lat_lon: need nlat >= 2 and even nlon >= 4");
  }
  auto d = std::make_shared<SphereGridData>();
  d->dim = 3;
  d->nlat = nlat;
  d->nlon = nlon;
  d->id = next_grid_id();
  const GaussLegendreRule rule = gauss_legendre_rule(nlat);
  d->nodes.assign(static_cast<std::size_t>(nlat) * nlon, Vec::Zero(3));
  d->weights.assign(d->nodes.size(), 0.0);
  d->colatitudes.resize(nlat);
  const double dphi = 2.0 * std::numbers::pi / nlon;
  for (int row = 0; row < nlat; ++row) {
    // Row 0 is the northernmost: z descending.
    const double z = rule.nodes[nlat - 1 - row];
    d->colatitudes[row] = std::acos(z);
  }
  for (int row = 0; row < (nlat + 1) / 2; ++row) {
    const int mirror = nlat - 1 - row;
    const double z = rule.nodes[nlat - 1 - row];
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double w = rule.weights[nlat - 1 - row] * dphi;
    for (int col = 0; col < nlon / 2; ++col) {
      const double phi = dphi * col;
      const double x = s * std::cos(phi);
      const double y = s * std::sin(phi);
      const std::size_t half = nlon / 2;
      const std::size_t north = static_cast<std::size_t>(row) * nlon;
      const std::size_t south = static_cast<std::size_t>(mirror) * nlon;
      // (x, y, z), its longitude opposite, and both antipodes.
      const double coords[4][3] = {{x, y, z}, {-x, -y, z}, {-x, -y, -z}, {x, y, -z}};
      const std::size_t slots[4] = {north + col, north + col + half, south + col + half, south + col};
      for (int c = 0; c < 4; ++c) {
        Vec p(3);
        p << coords[c][0], coords[c][1], coords[c][2];
        d->nodes[slots[c]] = p;
        d->weights[slots[c]] = w;
      }
    }
  }
  build_index(*d);
  return SphereGrid(std::move(d));
}

SphereGrid SphereGrid::monte_carlo(int n, int count, std::uint64_t seed) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("SphereGrid::monte_carlo: unsupported dimension");
  if (count < 1) throw std::invalid_argument("SphereGrid::monte_carlo: count must be >= 1");
  auto d = std::make_shared<SphereGridData>();
  d->dim = n;
  d->seed = seed;
  d->id = next_grid_id();
  d->nodes.reserve(count);
  Rng rng(seed, 0x5eed0001ULL);
  for (int k = 0; k < count; ++k) d->nodes.push_back(sample_sphere(rng, n));
  d->weights.assign(count, unit_sphere_area(n) / count);
  build_index(*d);
  return SphereGrid(std::move(d));
}

std::optional<std::size_t> SphereGrid::find_node(const Vec& u) const {
  if (u.size() != dim()) return std::nullopt;
  const std::uint64_t h = hash_direction(u);
  auto it = std::lower_bound(data_->index.begin(), data_->index.end(), std::make_pair(h, std::size_t{0}));
  for (; it != data_->index.end() && it->first == h; ++it) {
    if (data_->nodes[it->second] == u) return it->second;
  }
  return std::nullopt;
}

std::size_t SphereGrid::antipode(std::size_t k) const {
  if (!is_lat_lon()) throw std::logic_error("SphereGrid::antipode: only defined for lat-lon grids");
  const std::size_t row = k / nlon();
  const std::size_t col = k % nlon();
  return (nlat() - 1 - row) * nlon() + (col + nlon() / 2) % nlon();
}

double SphereGrid::integrate(std::span<const double> values) const {
  if (values.size() != size()) throw std::invalid_argument("SphereGrid::integrate: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) sum += data_->weights[k] * values[k];
  return sum;
}

}  // namespace startomo
