#include "startomo/star_body.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "startomo/harmonics.hpp"
#include "startomo/parallel.hpp"

namespace startomo {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("catalog_body: ") + what + " must be positive and finite");
  }
}

/// Bilinear (colatitude, longitude) interpolation of node values on a lat-lon
/// grid; the poles carry the mean of the adjacent row.
class LatLonInterpolator {
 public:
  LatLonInterpolator(SphereGrid grid, std::shared_ptr<const std::vector<double>> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    const int nlon = grid_.nlon();
    const int last = grid_.nlat() - 1;
    double north = 0.0;
    double south = 0.0;
    for (int c = 0; c < nlon; ++c) {
      north += (*values_)[c];
      south += (*values_)[static_cast<std::size_t>(last) * nlon + c];
    }
    north_ = north / nlon;
    south_ = south / nlon;
    dphi_ = 2.0 * std::numbers::pi / nlon;
  }

  double operator()(const Vec& u) const {
    const auto colat = grid_.colatitudes();
    const int nlat = grid_.nlat();
    const int nlon = grid_.nlon();
    const double theta = std::acos(std::clamp(u[2], -1.0, 1.0));
    double phi = std::atan2(u[1], u[0]);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    double pos = phi / dphi_;
    int col = static_cast<int>(std::floor(pos));
    double fphi = pos - col;
    col = ((col % nlon) + nlon) % nlon;
    const int col1 = (col + 1) % nlon;
    if (fphi < 1e-12 || fphi > 1.0 - 1e-12) {
      if (auto k = grid_.find_node(u)) return (*values_)[*k];
    }

    auto row_value = [&](int row) {
      const std::size_t base = static_cast<std::size_t>(row) * nlon;
      return (1.0 - fphi) * (*values_)[base + col] + fphi * (*values_)[base + col1];
    };

    if (theta <= colat[0]) {
      const double w = theta / colat[0];
      return (1.0 - w) * north_ + w * row_value(0);
    }
    if (theta >= colat[nlat - 1]) {
      const double w = (std::numbers::pi - theta) / (std::numbers::pi - colat[nlat - 1]);
      return (1.0 - w) * south_ + w * row_value(nlat - 1);
    }
    const int row = static_cast<int>(std::upper_bound(colat.begin(), colat.end(), theta) - colat.begin()) - 1;
    const double ftheta = (theta - colat[row]) / (colat[row + 1] - colat[row]);
    return (1.0 - ftheta) * row_value(row) + ftheta * row_value(row + 1);
  }

 private:
  SphereGrid grid_;
  std::shared_ptr<const std::vector<double>> values_;
  double north_ = 0.0;
  double south_ = 0.0;
  double dphi_ = 0.0;
};

/// Weighted least-squares fit in tangent coordinates over the nearest nodes
/// (quadratic when there are at least twice as many neighbours as quadratic
/// coefficients, affine otherwise), clamped to the range of the neighbour
/// values.
class ScatteredInterpolator {
 public:
  ScatteredInterpolator(std::shared_ptr<const GridValues> stored, int neighbors)
      : stored_(std::move(stored)), neighbors_(neighbors) {}

  double operator()(const Vec& u) const {
    const SphereGrid& grid = stored_->grid;
    const auto& values = stored_->values;
    if (auto k = grid.find_node(u)) return values[*k];
    const int d = grid.dim() - 1;
    std::vector<std::pair<double, std::size_t>> near(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) near[k] = {-grid.node(k).dot(u), k};
    const std::size_t count = std::min<std::size_t>(neighbors_, near.size());
    std::partial_sort(near.begin(), near.begin() + count, near.end());

    const int quadratic_terms = 1 + d + d * (d + 1) / 2;
    const int terms = count >= 2 * static_cast<std::size_t>(quadratic_terms) ? quadratic_terms : 1 + d;
    const auto tangent = complement_basis(u);
    // Squared chord distance of the farthest neighbour sets the kernel width.
    const double width = 2.0 * (1.0 + near[count - 1].first) * 1.0001 + 1e-300;
    Eigen::MatrixXd a(count, terms);
    Eigen::VectorXd b(count);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::vector<double> z(d);
    for (std::size_t j = 0; j < count; ++j) {
      const Vec& x = grid.node(near[j].second);
      const double chord2 = 2.0 * (1.0 + near[j].first);
      const double w = std::sqrt(std::max(1.0 - chord2 / width, 0.0));
      for (int c = 0; c < d; ++c) z[c] = (x - u).dot(tangent[c]);
      int col = 0;
      a(j, col++) = w;
      for (int c = 0; c < d; ++c) a(j, col++) = w * z[c];
      if (terms == quadratic_terms) {
        for (int c = 0; c < d; ++c) {
          for (int e = c; e < d; ++e) a(j, col++) = w * z[c] * z[e];
        }
      }
      const double value = values[near[j].second];
      b[j] = w * value;
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    return std::clamp(coef[0], lo, hi);
  }

 private:
  std::shared_ptr<const GridValues> stored_;
  int neighbors_;
};

RadialBounds bounds_of(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

}  // namespace

const char* to_string(BodyKind kind) {
  switch (kind) {
    case BodyKind::ball: return "ball";
    case BodyKind::ellipsoid: return "ellipsoid";
    case BodyKind::perturbed_ball: return "perturbed-ball";
    case BodyKind::shifted_ball: return "shifted-ball";
    case BodyKind::cube: return "cube";
    case BodyKind::grid_backed: return "grid-backed";
    case BodyKind::operator_derived: return "operator-derived";
  }
  return "unknown";
}

StarBody::StarBody(int dim, BodyKind kind, RadialFunction radial, RadialBounds bounds, std::string label)
    : dim_(dim), kind_(kind), radial_(std::move(radial)), bounds_(bounds), label_(std::move(label)) {
  if (dim_ < 2 || dim_ > kMaxDim) throw std::invalid_argument("StarBody: unsupported dimension");
  if (!radial_) throw std::invalid_argument("StarBody: missing radial function");
  if (label_.empty()) label_ = to_string(kind_);
}

StarBody StarBody::with_lipschitz_bound(double bound) const {
  StarBody copy = *this;
  copy.lipschitz_ = bound;
  return copy;
}

StarBody StarBody::with_grid_values(std::shared_ptr<const GridValues> grid) const {
  StarBody copy = *this;
  copy.grid_ = std::move(grid);
  return copy;
}

std::string describe(const BodySpec& spec) {
  std::ostringstream out;
  auto list = [&](const std::vector<double>& v) {
    out << '(';
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << v[k];
    out << ')';
  };
  std::visit(overloaded{
                 [&](const BallSpec& s) { out << "ball r=" << s.r; },
                 [&](const EllipsoidSpec& s) {
                   out << "ellipsoid ";
                   list(s.axes);
                 },
                 [&](const PerturbedBallSpec& s) {
                   out << "perturbed-ball r=" << s.r << " l=" << s.l << " m=" << s.m << " eps=" << s.eps;
                 },
                 [&](const ShiftedBallSpec& s) {
                   out << "shifted-ball c=";
                   list(s.center);
                   out << " r=" << s.r;
                 },
                 [&](const CubeSpec& s) { out << "cube h=" << s.h; },
             },
             spec);
  return out.str();
}

StarBody make_ball(int n, double r) {
  require_positive(r, "ball radius");
  return StarBody(n, BodyKind::ball, [r](const Vec&) { return r; }, {r, r}, describe(BallSpec{r}))
      .with_lipschitz_bound(0.0);
}

StarBody catalog_body(const BodySpec& spec, int n) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("catalog_body: unsupported dimension");
  const std::string label = describe(spec);
  return std::visit(
      overloaded{
          [&](const BallSpec& s) { return make_ball(n, s.r); },
          [&](const EllipsoidSpec& s) {
            if (static_cast<int>(s.axes.size()) != n) {
              throw std::invalid_argument("catalog_body: ellipsoid needs exactly n semi-axes");
            }
            Vec inv_sq(n);
            for (int k = 0; k < n; ++k) {
              require_positive(s.axes[k], "ellipsoid semi-axis");
              inv_sq[k] = 1.0 / (s.axes[k] * s.axes[k]);
            }
            const auto [lo, hi] = std::minmax_element(s.axes.begin(), s.axes.end());
            return StarBody(
                n, BodyKind::ellipsoid,
                [inv_sq](const Vec& u) { return 1.0 / std::sqrt(u.cwiseAbs2().dot(inv_sq)); }, {*lo, *hi}, label);
          },
          [&](const PerturbedBallSpec& s) {
            if (n != 3) throw std::invalid_argument("catalog_body: perturbed ball is defined for n = 3 only");
            require_positive(s.r, "perturbed ball radius");
            if (s.l < 0 || std::abs(s.m) > s.l) throw std::invalid_argument("catalog_body: need 0 <= |m| <= l");
            const double amplitude = std::abs(s.eps) * real_sph_harm_bound(s.l);
            if (!(amplitude < 1.0)) {
              throw std::invalid_argument("catalog_body: perturbation too large for a positive radial function");
            }
            return StarBody(
                n, BodyKind::perturbed_ball,
                [r = s.r, l = s.l, m = s.m, eps = s.eps](const Vec& u) { return r * (1.0 + eps * real_sph_harm(l, m, u)); },
                {s.r * (1.0 - amplitude), s.r * (1.0 + amplitude)}, label);
          },
          [&](const ShiftedBallSpec& s) {
            if (static_cast<int>(s.center.size()) != n) {
              throw std::invalid_argument("catalog_body: shifted ball center must have n coordinates");
            }
            require_positive(s.r, "shifted ball radius");
            Vec c(n);
            for (int k = 0; k < n; ++k) c[k] = s.center[k];
            const double cn = c.norm();
            if (!(cn < s.r)) throw std::invalid_argument("catalog_body: shifted ball must contain the origin (|c| < r)");
            const double slack = s.r * s.r - c.squaredNorm();
            return StarBody(
                n, BodyKind::shifted_ball,
                [c, slack](const Vec& u) {
                  const double uc = u.dot(c);
                  return uc + std::sqrt(uc * uc + slack);
                },
                {s.r - cn, s.r + cn}, label);
          },
          [&](const CubeSpec& s) {
            require_positive(s.h, "cube half-width");
            return StarBody(
                n, BodyKind::cube, [h = s.h](const Vec& u) { return h / u.cwiseAbs().maxCoeff(); },
                {s.h, s.h * std::sqrt(static_cast<double>(n))}, label);
          },
      },
      spec);
}

StarBody power_body(const StarBody& body, double q) {
  if (!std::isfinite(q) || q == 0.0) throw std::invalid_argument("power_body: exponent must be finite and nonzero");
  RadialBounds b = q > 0 ? RadialBounds{std::pow(body.bounds().lo, q), std::pow(body.bounds().hi, q)}
                         : RadialBounds{std::pow(body.bounds().hi, q), std::pow(body.bounds().lo, q)};
  const BodyKind kind = body.kind() == BodyKind::ball ? BodyKind::ball : BodyKind::operator_derived;
  std::ostringstream label;
  label << "<" << body.label() << ">^" << q;
  StarBody result(
      body.dim(), kind, [inner = body.radial_function(), q](const Vec& u) { return std::pow(inner(u), q); }, b,
      label.str());
  if (const GridValues* gv = body.grid_values()) {
    auto powered = std::make_shared<GridValues>(GridValues{gv->grid, gv->values});
    for (double& v : powered->values) v = std::pow(v, q);
    result = result.with_grid_values(std::move(powered));
  }
  return result;
}

StarBody scale_body(const StarBody& body, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("scale_body: factor must be positive");
  std::ostringstream label;
  label << lambda << "*" << body.label();
  const BodyKind kind = body.kind() == BodyKind::ball ? BodyKind::ball : BodyKind::operator_derived;
  StarBody result(
      body.dim(), kind, [inner = body.radial_function(), lambda](const Vec& u) { return lambda * inner(u); },
      {lambda * body.bounds().lo, lambda * body.bounds().hi}, label.str());
  if (const GridValues* gv = body.grid_values()) {
    auto scaled = std::make_shared<GridValues>(GridValues{gv->grid, gv->values});
    for (double& v : scaled->values) v *= lambda;
    result = result.with_grid_values(std::move(scaled));
  }
  if (body.lipschitz_bound()) result = result.with_lipschitz_bound(lambda * *body.lipschitz_bound());
  return result;
}

std::vector<double> sample(const StarBody& body, const SphereGrid& grid) {
  if (grid.dim() != body.dim()) throw std::invalid_argument("sample: grid and body dimensions differ");
  if (const GridValues* gv = body.grid_values(); gv && gv->grid == grid) return gv->values;
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) { values[k] = body.radial(grid.node(k)); });
  return values;
}

double dual_volume(std::span<const double> radial_values, double i, const SphereGrid& grid) {
  if (radial_values.size() != grid.size()) throw std::invalid_argument("dual_volume: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) sum += grid.weight(k) * std::pow(radial_values[k], i);
  return sum / grid.dim();
}

double dual_volume(const StarBody& body, double i, const SphereGrid& grid) {
  return dual_volume(sample(body, grid), i, grid);
}

double sup_distance(const StarBody& a, const StarBody& b, const SphereGrid& grid) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sup_distance: dimension mismatch");
  const auto va = sample(a, grid);
  const auto vb = sample(b, grid);
  double d = 0.0;
  for (std::size_t k = 0; k < va.size(); ++k) d = std::max(d, std::abs(va[k] - vb[k]));
  return d;
}

StarBody equivalent_ball(const StarBody& body, const SphereGrid& grid) {
  const int n = body.dim();
  const double volume = dual_volume(body, n, grid);
  return make_ball(n, std::pow(volume / unit_ball_volume(n), 1.0 / n));
}

StarBody from_grid_values(const SphereGrid& grid, std::vector<double> values, std::string label) {
  if (values.size() != grid.size()) throw std::invalid_argument("from_grid_values: size mismatch");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("from_grid_values: radial values must be positive and finite");
  }
  auto stored = std::make_shared<GridValues>(GridValues{grid, std::move(values)});
  const RadialBounds b = bounds_of(stored->values);
  RadialFunction radial;
  if (grid.is_lat_lon()) {
    auto shared_values = std::shared_ptr<const std::vector<double>>(stored, &stored->values);
    radial = LatLonInterpolator(grid, shared_values);
  } else {
    radial = [stored](const Vec& u) {
      if (auto k = stored->grid.find_node(u)) return stored->values[*k];
      throw std::domain_error("grid-backed body: off-node evaluation needs an interpolating (n = 3) grid");
    };
  }
  return StarBody(grid.dim(), BodyKind::grid_backed, std::move(radial), b, std::move(label))
      .with_grid_values(std::move(stored));
}

StarBody scattered_interpolant(const SphereGrid& grid, std::vector<double> values, int neighbors, std::string label) {
  if (values.size() != grid.size()) throw std::invalid_argument("scattered_interpolant: size mismatch");
  if (neighbors < grid.dim() + 1) throw std::invalid_argument("scattered_interpolant: too few neighbours for an affine fit");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("scattered_interpolant: radial values must be positive and finite");
  }
  auto stored = std::make_shared<const GridValues>(GridValues{grid, std::move(values)});
  const RadialBounds b = bounds_of(stored->values);
  return StarBody(grid.dim(), BodyKind::grid_backed, ScatteredInterpolator(stored, neighbors), b, std::move(label))
      .with_grid_values(stored);
}

StarBody materialize(const StarBody& body, const SphereGrid& grid) {
  return from_grid_values(grid, sample(body, grid), body.label());
}

}  // namespace startomo
