#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace startomo {

/// Largest ambient dimension supported by the library.
inline constexpr int kMaxDim = 16;

/// Point or direction in R^n. Dynamic size with a fixed upper bound, so it
/// lives on the stack and never allocates.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Volume of the unit ball B_n, pi^{n/2} / Gamma(1 + n/2).
double unit_ball_volume(int n);

/// Surface area of S^{n-1}, n * omega_n.
double unit_sphere_area(int n);

/// Blaschke-Petkantschin constant
///   b_{n,i} = omega_{n-i-1} / (i+1)! * (i n / ((i+1)(n-1)))^{i+1}
/// for n >= 3 and 1 <= i <= n-2.
double bp_coefficient(int n, int i);

/// Normalization that actually makes
///   V~_{i+1}(I_i K) = c * int Lambda * prod |x_j|^{1-n/(i+1)} 1_{<K^{(i+1)/n}>}(x_j)
/// hold. The hyperplane Blaschke-Petkantschin identity carries the surface
/// area (n-q) omega_{n-q} of S^{n-q-1}, not n omega_{n-q}, so this equals
/// bp_coefficient(n, i) * (n-i-1)/n.
double reformulation_coefficient(int n, int i);

/// V_q(conv{o, x_1, ..., x_q}) = sqrt(det(G^T G)) / q!, where G has the points
/// as columns. Linearly dependent configurations (scaled pivot below 1e-13)
/// return exactly 0.
double simplex_volume(std::span<const Vec> points);

/// Same volume computed from a precomputed q x q Gram matrix.
double simplex_volume_from_gram(const Eigen::MatrixXd& gram);

/// Orthonormal basis of u^perp (n-1 vectors). Built from one Householder
/// reflection that sends the axis of the largest |u_k| onto -sign(u_k) u, so
/// the result is identical for u and -u.
std::vector<Vec> complement_basis(const Vec& u);

/// Counter-based splittable random stream. The k-th draw is a pure function of
/// (seed, stream, k), so identical (seed, stream) pairs always reproduce the
/// same sequence regardless of scheduling.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0();
  double normal();

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform random direction on S^{n-1} (normalized Gaussian vector).
Vec sample_sphere(Rng& rng, int n);

/// Stable 64-bit mix of a direction's bit pattern; used to key per-direction
/// random streams and caches.
std::uint64_t hash_direction(const Vec& u);

}  // namespace startomo
