#include "startomo/bp_montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "startomo/parallel.hpp"

namespace startomo {

namespace {

double det3(const std::array<Vec, 3>& x, int a, int b, int c) {
  return x[0][a] * (x[1][b] * x[2][c] - x[1][c] * x[2][b]) - x[0][b] * (x[1][a] * x[2][c] - x[1][c] * x[2][a]) +
         x[0][c] * (x[1][a] * x[2][b] - x[1][b] * x[2][a]);
}

/// V_q(conv{o, x_1..x_q}) via Lagrange / Cauchy-Binet sums of squared minors
/// for q <= 3 (no cancellation for nearly dependent points), QR otherwise.
double chain_volume(const std::vector<Vec>& x) {
  const int q = static_cast<int>(x.size());
  const int n = static_cast<int>(x[0].size());
  if (q == 1) return x[0].norm();
  if (q == 2) {
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const double m = x[0][a] * x[1][b] - x[0][b] * x[1][a];
        sum += m * m;
      }
    }
    return std::sqrt(sum) / 2.0;
  }
  if (q == 3) {
    const std::array<Vec, 3> p{x[0], x[1], x[2]};
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        for (int c = b + 1; c < n; ++c) {
          const double m = det3(p, a, b, c);
          sum += m * m;
        }
      }
    }
    return std::sqrt(sum) / 6.0;
  }
  return simplex_volume(x);
}

void require_scope(int n, int i) {
  if (n < 3 || i < 1 || i > n - 2) throw std::invalid_argument("bp_montecarlo: needs n >= 3 and 1 <= i <= n-2");
}

}  // namespace

McEstimate aggregate_blocks(std::vector<double> block_means) {
  McEstimate out;
  out.blocks = static_cast<int>(block_means.size());
  if (block_means.size() < 2) throw std::invalid_argument("aggregate_blocks: need at least two blocks");
  out.block_means = block_means;

  std::vector<double> finite;
  for (double m : block_means) {
    if (std::isfinite(m)) finite.push_back(m);
  }
  out.nonfinite_blocks = static_cast<int>(block_means.size() - finite.size());
  std::sort(finite.begin(), finite.end());

  if (out.nonfinite_blocks == 0) {
    const std::size_t b = finite.size();
    out.estimate = b % 2 ? finite[b / 2] : 0.5 * (finite[b / 2 - 1] + finite[b / 2]);
    const double mean = std::accumulate(finite.begin(), finite.end(), 0.0) / b;
    out.block_average = mean;
    // Jackknife over blocks: leave-one-out averages around the full average.
    double var = 0.0;
    for (double m : finite) {
      const double loo = (b * mean - m) / (b - 1.0);
      var += (loo - mean) * (loo - mean);
    }
    out.std_error = std::sqrt(var * (b - 1.0) / b);
    out.method = "median-of-means";
    return out;
  }

  out.warning = true;
  out.method = "trimmed-mean";
  const std::size_t trim = finite.size() / 10;
  if (finite.size() < 2 * trim + 2) {
    out.estimate = std::numeric_limits<double>::quiet_NaN();
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    out.block_average = out.estimate;
    return out;
  }
  const std::vector<double> kept(finite.begin() + trim, finite.end() - trim);
  const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / kept.size();
  double ss = 0.0;
  for (double m : kept) ss += (m - mean) * (m - mean);
  out.estimate = mean;
  out.block_average = mean;
  out.std_error = std::sqrt(ss / (kept.size() - 1.0) / kept.size());
  return out;
}

McEstimate d_functional(const StarBody& body, int i, std::int64_t samples, int blocks, const Rng& rng) {
  const int n = body.dim();
  require_scope(n, i);
  if (blocks < 8 || samples < blocks) throw std::invalid_argument("d_functional: needs samples >= blocks >= 8");
  const int q = i + 1;
  const double p = n + 1.0 - static_cast<double>(n) / q;
  const double area = unit_sphere_area(n);
  const double coefficient = reformulation_coefficient(n, i);

  std::vector<double> means(blocks);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    Rng stream = rng.split(b);
    const std::int64_t count = samples / blocks + (static_cast<std::int64_t>(b) < samples % blocks ? 1 : 0);
    std::vector<Vec> x(q);
    double sum = 0.0;
    for (std::int64_t s = 0; s < count; ++s) {
      double weight = coefficient;
      for (int j = 0; j < q; ++j) {
        const Vec theta = sample_sphere(stream, n);
        const double rho = body.radial(theta);
        const double rho_p = std::pow(rho, p);
        x[j] = (rho * std::pow(stream.uniform_open0(), 1.0 / p)) * theta;
        weight *= area * rho_p / p;
      }
      sum += weight / chain_volume(x);
    }
    means[b] = sum / count;
  });

  McEstimate out = aggregate_blocks(std::move(means));
  out.samples = samples;
  out.seed = rng.seed();
  return out;
}

McEstimate mc_V(const StarBody& body, int i, std::int64_t samples, int blocks, const Rng& rng) {
  require_scope(body.dim(), i);
  return d_functional(power_body(body, (i + 1.0) / body.dim()), i, samples, blocks, rng);
}

double levelset_halfwidth(const Vec& y, double z, int n, int i) {
  require_scope(n, i);
  if (!(z > 0.0)) throw std::invalid_argument("levelset_halfwidth: z must be positive");
  const double radius = std::pow(z, -(i + 1.0) / (n - i - 1.0));
  return std::sqrt(std::max(radius * radius - y.squaredNorm(), 0.0));
}

double shifted_simplex_volume(const Vec& u, const std::vector<Vec>& ys, const std::vector<double>& s) {
  const std::size_t q = ys.size();
  if (s.size() != q || q == 0) throw std::invalid_argument("shifted_simplex_volume: size mismatch");
  // Coordinates in an orthonormal frame (u^perp basis, u): the last
  // coordinate is s_j itself, so s -> -s negates one row exactly.
  const std::vector<Vec> basis = complement_basis(u);
  const int n = static_cast<int>(u.size());
  std::vector<Vec> x(q, Vec(n));
  for (std::size_t j = 0; j < q; ++j) {
    for (int k = 0; k + 1 < n; ++k) x[j][k] = basis[k].dot(ys[j]);
    x[j][n - 1] = s[j];
  }
  if (q <= 3) return chain_volume(x);
  Eigen::MatrixXd gram(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = 0; k < q; ++k) {
      gram(j, k) = x[j].head(n - 1).dot(x[k].head(n - 1)) + s[j] * s[k];
    }
  }
  return simplex_volume_from_gram(gram);
}

ConvexityReport lambda_levelset_convexity_check(const Vec& u, const std::vector<Vec>& ys, int trials, Rng rng) {
  if (ys.empty()) throw std::invalid_argument("lambda_levelset_convexity_check: no points");
  for (const Vec& y : ys) {
    if (std::abs(y.dot(u)) > 1e-12 * std::max(1.0, y.norm())) {
      throw std::invalid_argument("lambda_levelset_convexity_check: points must lie in u^perp");
    }
  }
  const std::size_t q = ys.size();
  ConvexityReport report;
  std::vector<double> s(q), t(q), mid(q), neg(q);
  for (int trial = 0; trial < trials; ++trial) {
    for (std::size_t j = 0; j < q; ++j) {
      s[j] = 4.0 * rng.uniform() - 2.0;
      t[j] = 4.0 * rng.uniform() - 2.0;
      mid[j] = 0.5 * (s[j] + t[j]);
      neg[j] = -s[j];
    }
    const double vs = shifted_simplex_volume(u, ys, s);
    const double vt = shifted_simplex_volume(u, ys, t);
    const double vm = shifted_simplex_volume(u, ys, mid);
    report.max_violation = std::max(report.max_violation, vm - 0.5 * (vs + vt));
    if (shifted_simplex_volume(u, ys, neg) != vs) ++report.evenness_failures;
    ++report.trials;
  }
  return report;
}

bool FiberProduct::symmetric_rectangle(double tol) const {
  return std::all_of(factors.begin(), factors.end(), [tol](const IntervalUnion& f) {
    return f.size() == 1 && std::abs(f.intervals()[0].lo + f.intervals()[0].hi) <= tol;
  });
}

FiberProduct fiber_product(const StarBody& body, const Vec& u, const std::vector<Vec>& ys, const FiberOptions& options) {
  FiberProduct out;
  for (const Vec& y : ys) out.factors.push_back(fiber_intervals(body, u, y, options));
  return out;
}

}  // namespace startomo
