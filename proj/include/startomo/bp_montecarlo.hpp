#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "startomo/css.hpp"
#include "startomo/geom.hpp"
#include "startomo/interval_union.hpp"
#include "startomo/star_body.hpp"

namespace startomo {

inline constexpr int kDefaultBlocks = 64;

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  /// Plain average of the block means.
  double block_average = 0.0;
  std::int64_t samples = 0;
  int blocks = 0;
  std::uint64_t seed = 0;
  std::string method;
  /// Set when some block mean was not finite and the trimmed-mean fallback
  /// produced the estimate.
  bool warning = false;
  int nonfinite_blocks = 0;
  std::vector<double> block_means;
};

/// Estimator of
///   c * int_{(R^n)^{i+1}} prod_j |x_j|^{1-n/(i+1)} 1_L(x_j) / V_{i+1}(conv{o, x_1..x_{i+1}})
/// with c = reformulation_coefficient(n, i). Each x_j = r theta with theta
/// uniform and r = rho_L(theta) U^{1/p}, p = n + 1 - n/(i+1), so the radial
/// weight is absorbed exactly and every point carries n omega_n rho_L^p / p.
/// Blocks use split streams of rng; the estimate is the median of block
/// means and the standard error is the jackknife error of their average.
McEstimate d_functional(const StarBody& body, int i, std::int64_t samples, int blocks, const Rng& rng);

/// d_functional(<K^{(i+1)/n}>): estimates V~_{i+1}(I_i K).
McEstimate mc_V(const StarBody& body, int i, std::int64_t samples, int blocks, const Rng& rng);

/// Median-of-means aggregation of block means (exposed for testing).
McEstimate aggregate_blocks(std::vector<double> block_means);

/// h >= 0 with {t : |y + t u|^{1-n/(i+1)} >= z} = [-h, h].
double levelset_halfwidth(const Vec& y, double z, int n, int i);

/// V_q(conv{o, y_1 + s_1 u, ..., y_q + s_q u}) for unit u and y_j in u^perp.
/// Evaluated in a frame adapted to u, so it is exactly even in s and exactly
/// zero on degenerate configurations for q <= 3.
double shifted_simplex_volume(const Vec& u, const std::vector<Vec>& ys, const std::vector<double>& s);

struct ConvexityReport {
  int trials = 0;
  double max_violation = 0.0;
  int evenness_failures = 0;
};

/// Midpoint convexity and evenness of s -> V(conv{o, y_j + s_j u}) on random
/// pairs s, s' in [-2, 2]^q.
ConvexityReport lambda_levelset_convexity_check(const Vec& u, const std::vector<Vec>& ys, int trials, Rng rng);

struct FiberProduct {
  std::vector<IntervalUnion> factors;

  /// Every factor is a single interval [-a, a] within tol.
  bool symmetric_rectangle(double tol) const;
};

/// Factors {s : y_j + s u in K}, j = 1..q.
FiberProduct fiber_product(const StarBody& body, const Vec& u, const std::vector<Vec>& ys,
                           const FiberOptions& options = {});

}  // namespace startomo
