#include "startomo/geom.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

namespace startomo {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double factorial(int q) {
  double f = 1.0;
  for (int k = 2; k <= q; ++k) f *= k;
  return f;
}

void check_bp_range(int n, int i) {
  if (n < 3 || i < 1 || i > n - 2) {
    throw std::invalid_argument("bp coefficient requires n >= 3 and 1 <= i <= n-2 (got n=" +
                                std::to_string(n) + ", i=" + std::to_string(i) + ")");
  }
}

constexpr double kDegeneracyCutoff = 1e-13;

}  // namespace

double unit_ball_volume(int n) {
  if (n < 1) throw std::invalid_argument("unit_ball_volume: n must be >= 1");
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(1.0 + 0.5 * n);
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

double bp_coefficient(int n, int i) {
  check_bp_range(n, i);
  const double ratio = static_cast<double>(i * n) / static_cast<double>((i + 1) * (n - 1));
  return unit_ball_volume(n - i - 1) / factorial(i + 1) * std::pow(ratio, i + 1);
}

double reformulation_coefficient(int n, int i) {
  return bp_coefficient(n, i) * static_cast<double>(n - i - 1) / static_cast<double>(n);
}

double simplex_volume(std::span<const Vec> points) {
  const int q = static_cast<int>(points.size());
  if (q == 0) throw std::invalid_argument("simplex_volume: need at least one point");
  const int n = static_cast<int>(points[0].size());
  if (q > n) throw std::invalid_argument("simplex_volume: more points than dimensions");
  Eigen::MatrixXd g(n, q);
  for (int j = 0; j < q; ++j) {
    if (points[j].size() != n) throw std::invalid_argument("simplex_volume: dimension mismatch");
    if (!points[j].allFinite()) throw std::invalid_argument("simplex_volume: non-finite point");
    g.col(j) = points[j];
  }
  const double scale = g.colwise().norm().maxCoeff();
  if (scale == 0.0) return 0.0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
  const auto& r = qr.matrixQR();
  double det = 1.0;
  for (int k = 0; k < q; ++k) {
    const double pivot = std::abs(r(k, k));
    if (pivot <= kDegeneracyCutoff * scale) return 0.0;
    det *= pivot;
  }
  return det / factorial(q);
}

double simplex_volume_from_gram(const Eigen::MatrixXd& gram) {
  const int q = static_cast<int>(gram.rows());
  if (q == 0 || gram.cols() != q) throw std::invalid_argument("simplex_volume_from_gram: bad shape");
  const double scale = gram.diagonal().maxCoeff();
  if (!(scale > 0.0)) return 0.0;
  // Pivoted Cholesky on the Gram matrix: pivots are squared QR pivots.
  Eigen::MatrixXd a = gram;
  double det = 1.0;
  for (int k = 0; k < q; ++k) {
    int best = k;
    for (int j = k + 1; j < q; ++j) {
      if (a(j, j) > a(best, best)) best = j;
    }
    if (best != k) {
      a.row(k).swap(a.row(best));
      a.col(k).swap(a.col(best));
    }
    const double pivot = a(k, k);
    if (!(pivot > kDegeneracyCutoff * kDegeneracyCutoff * scale)) return 0.0;
    det *= pivot;
    for (int r = k + 1; r < q; ++r) {
      const double factor = a(r, k) / pivot;
      for (int c = k + 1; c < q; ++c) a(r, c) -= factor * a(k, c);
    }
  }
  return std::sqrt(det) / factorial(q);
}

std::vector<Vec> complement_basis(const Vec& u) {
  const int n = static_cast<int>(u.size());
  if (n < 2) throw std::invalid_argument("complement_basis: dimension must be >= 2");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw std::invalid_argument("complement_basis: u is not a unit vector");
  int axis = 0;
  for (int k = 1; k < n; ++k) {
    if (std::abs(u[k]) > std::abs(u[axis])) axis = k;
  }
  // v = u + s e_axis with s = sign(u_axis) has |v|^2 = 2 + 2|u_axis| >= 2.
  // Flipping u flips v, which leaves H = I - 2 v v^T / |v|^2 unchanged.
  const double s = u[axis] >= 0.0 ? 1.0 : -1.0;
  Vec v = u;
  v[axis] += s;
  const double vv = v.squaredNorm();
  std::vector<Vec> basis;
  basis.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    if (j == axis) continue;
    Vec col = (-2.0 * v[j] / vv) * v;
    col[j] += 1.0;
    basis.push_back(col);
  }
  return basis;
}

Rng Rng::split(std::uint64_t index) const {
  return Rng(seed_, splitmix64(splitmix64(stream_ ^ 0x5851f42d4c957f2dULL) + index));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream_ + 0x632be59bd9b4e019ULL));
  return splitmix64(key + splitmix64(counter_++));
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open0() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vec sample_sphere(Rng& rng, int n) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("sample_sphere: unsupported dimension");
  Vec v(n);
  double norm = 0.0;
  do {
    for (int k = 0; k < n; ++k) v[k] = rng.normal();
    norm = v.norm();
  } while (norm < 1e-300);
  return v / norm;
}

std::uint64_t hash_direction(const Vec& u) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(u.size()));
  for (int k = 0; k < u.size(); ++k) {
    double x = u[k];
    if (x == 0.0) x = 0.0;  // fold -0 onto +0
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

}  // namespace startomo
