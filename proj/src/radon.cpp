#include "startomo/radon.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "startomo/harmonics.hpp"
#include "startomo/parallel.hpp"

namespace startomo {
namespace {

void require_unit(const Vec& u) {
  if (std::abs(u.norm() - 1.0) > 1e-12) throw std::invalid_argument("radon: direction is not a unit vector");
}

/// Representative of {u, -u}: largest-magnitude coordinate made positive.
Vec canonical_sign(const Vec& u) {
  Eigen::Index axis = 0;
  u.cwiseAbs().maxCoeff(&axis);
  return u[axis] < 0.0 ? Vec(-u) : u;
}

/// Direction -> value memo. Values are deterministic, so concurrent writers
/// for the same key always store the same number.
class DirectionCache {
 public:
  template <class Compute>
  double get(const Vec& u, Compute&& compute) {
    const std::uint64_t key = hash_direction(u);
    {
      std::lock_guard lock(mutex_);
      auto [lo, hi] = map_.equal_range(key);
      for (auto it = lo; it != hi; ++it) {
        if (it->second.first == u) return it->second.second;
      }
    }
    const double value = compute();
    std::lock_guard lock(mutex_);
    map_.emplace(key, std::make_pair(u, value));
    return value;
  }

 private:
  std::mutex mutex_;
  std::unordered_multimap<std::uint64_t, std::pair<Vec, double>> map_;
};

}  // namespace

SphereFunction radial_power(const StarBody& body, double power) {
  return SphereFunction{body.dim(), [r = body.radial_function(), power](const Vec& u) { return std::pow(r(u), power); },
                        Parity::none};
}

RadonEstimate radon_estimate(const SphereFunction& f, const Vec& u, int m, const Rng& rng) {
  if (m < 4) throw std::invalid_argument("radon: need at least 4 subsphere nodes");
  require_unit(u);
  const int n = static_cast<int>(u.size());
  if (n != f.dim) throw std::invalid_argument("radon: dimension mismatch");
  const std::vector<Vec> basis = complement_basis(u);
  if (n == 3) {
    const double step = 2.0 * std::numbers::pi / m;
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
      const double a = step * k;
      Vec p = std::cos(a) * basis[0] + std::sin(a) * basis[1];
      sum += f(p);
    }
    return {sum * step, 0.0};
  }
  Rng stream = rng.split(hash_direction(canonical_sign(u)));
  double sum = 0.0;
  double sum_sq = 0.0;
  Vec coeff(n - 1);
  for (int k = 0; k < m; ++k) {
    double norm = 0.0;
    do {
      for (int j = 0; j < n - 1; ++j) coeff[j] = stream.normal();
      norm = coeff.norm();
    } while (norm < 1e-300);
    Vec p = Vec::Zero(n);
    for (int j = 0; j < n - 1; ++j) p += (coeff[j] / norm) * basis[j];
    const double value = f(p);
    sum += value;
    sum_sq += value * value;
  }
  const double area = unit_sphere_area(n - 1);
  const double mean = sum / m;
  const double var = std::max(0.0, sum_sq / m - mean * mean) * m / (m - 1.0);
  return {area * mean, area * std::sqrt(var / m)};
}

double radon(const SphereFunction& f, const Vec& u, int m, const Rng& rng) {
  return radon_estimate(f, u, m, rng).value;
}

StarBody intersection_body(const StarBody& body, int i, int m, const Rng& rng) {
  const int n = body.dim();
  if (i < 1 || i > n - 1) {
    throw std::invalid_argument("intersection_body: order i must satisfy 1 <= i <= n-1");
  }
  if (m < 4) throw std::invalid_argument("intersection_body: need at least 4 subsphere nodes");
  const SphereFunction integrand = radial_power(body, i);
  auto cache = std::make_shared<DirectionCache>();
  const double scale = 1.0 / (n - 1);
  RadialFunction radial = [integrand, m, rng, scale, cache](const Vec& u) {
    return cache->get(u, [&] { return scale * radon(integrand, u, m, rng); });
  };
  const double omega = unit_ball_volume(n - 1);
  const RadialBounds b{omega * std::pow(body.bounds().lo, i), omega * std::pow(body.bounds().hi, i)};
  std::ostringstream label;
  label << "I_" << i << "(" << body.label() << ")";
  const BodyKind kind = body.kind() == BodyKind::ball ? BodyKind::ball : BodyKind::operator_derived;
  return StarBody(n, kind, std::move(radial), b, label.str());
}

double self_adjointness_defect(const SphereFunction& f, const SphereFunction& g, const SphereGrid& grid, int m,
                               const Rng& rng) {
  if (f.dim != g.dim || f.dim != grid.dim()) throw std::invalid_argument("self_adjointness_defect: dimension mismatch");
  std::vector<double> lhs(grid.size());
  std::vector<double> rhs(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const Vec& u = grid.node(k);
    lhs[k] = radon(f, u, m, rng) * g(u);
    rhs[k] = f(u) * radon(g, u, m, rng);
  });
  const double a = grid.integrate(lhs);
  const double b = grid.integrate(rhs);
  return std::abs(a - b) / std::max(std::abs(a), 1e-300);
}

double funk_eigenvalue(int l, int m, const SphereGrid& grid) {
  if (l < 0 || l % 2 != 0) {
    throw std::invalid_argument("funk_eigenvalue: degree must be even and non-negative (R annihilates odd functions)");
  }
  if (grid.dim() != 3) throw std::invalid_argument("funk_eigenvalue: n = 3 diagnostic");
  const SphereFunction y{3, [l](const Vec& u) { return real_sph_harm(l, 0, u); }, Parity::even};
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec& u = grid.node(k);
    const double value = y(u);
    if (std::abs(value) <= 0.1) continue;
    sum += radon(y, u, m, Rng{}) / value;
    ++count;
  }
  if (count == 0) throw std::runtime_error("funk_eigenvalue: no grid node with |Y| > 0.1");
  return sum / count;
}

}  // namespace startomo
