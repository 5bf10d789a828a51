#include "startomo/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace startomo {

namespace {

constexpr double kWeld = 1e-12;

int exact_orient(const Point2& a, const Point2& b, const Point2& c) {
  using Q = boost::multiprecision::cpp_rational;
  const Q det = (Q(b.x) - Q(a.x)) * (Q(c.y) - Q(a.y)) - (Q(b.y) - Q(a.y)) * (Q(c.x) - Q(a.x));
  return det > 0 ? 1 : (det < 0 ? -1 : 0);
}

double cross(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

std::vector<Point2> weld(std::vector<Point2> pts) {
  std::vector<Point2> out;
  for (const Point2& p : pts) {
    if (!out.empty() && std::abs(p.x - out.back().x) <= kWeld && std::abs(p.y - out.back().y) <= kWeld) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && std::abs(out.front().x - out.back().x) <= kWeld &&
         std::abs(out.front().y - out.back().y) <= kWeld) {
    out.pop_back();
  }
  return out;
}

}  // namespace

int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  const double left = (b.x - a.x) * (c.y - a.y);
  const double right = (b.y - a.y) * (c.x - a.x);
  const double det = left - right;
  // Forward error bound of the two products and the subtraction.
  const double bound = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (det < -bound) return -1;
  return exact_orient(a, b, c);
}

ConvexPolygon::ConvexPolygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw std::invalid_argument("ConvexPolygon: needs at least 3 vertices");
  for (std::size_t k = 0; k < n; ++k) {
    if (orient2d(vertices_[k], vertices_[(k + 1) % n], vertices_[(k + 2) % n]) <= 0) {
      throw std::invalid_argument("ConvexPolygon: vertices must be strictly convex and counterclockwise");
    }
  }
  // Winding number one: the turning angles must sum to 2 pi.
  double turning = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Point2& a = vertices_[k];
    const Point2& b = vertices_[(k + 1) % n];
    const Point2& c = vertices_[(k + 2) % n];
    turning += std::atan2(cross(a, b, c), (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y));
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) throw std::invalid_argument("ConvexPolygon: not simple");
}

ConvexPolygon ConvexPolygon::rectangle(double x0, double x1, double y0, double y1) {
  if (!(x0 < x1 && y0 < y1)) throw std::invalid_argument("rectangle: needs non-empty interior");
  return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

ConvexPolygon ConvexPolygon::regular(int sides, double radius, double phase) {
  if (sides < 3 || !(radius > 0.0)) throw std::invalid_argument("regular polygon: bad parameters");
  std::vector<Point2> pts;
  for (int k = 0; k < sides; ++k) {
    const double a = phase + 2.0 * std::numbers::pi * k / sides;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return ConvexPolygon(std::move(pts));
}

double ConvexPolygon::area() const {
  if (empty()) return 0.0;
  double twice = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point2& a = vertices_[k];
    const Point2& b = vertices_[(k + 1) % n];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * twice;
}

bool ConvexPolygon::contains(const Point2& p) const {
  if (empty()) return false;
  const std::size_t n = vertices_.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (orient2d(vertices_[k], vertices_[(k + 1) % n], p) < 0) return false;
  }
  return true;
}

bool ConvexPolygon::origin_symmetric(double tol) const {
  for (const Point2& p : vertices_) {
    const bool found = std::any_of(vertices_.begin(), vertices_.end(), [&](const Point2& q) {
      return std::abs(p.x + q.x) <= tol && std::abs(p.y + q.y) <= tol;
    });
    if (!found) return false;
  }
  return true;
}

ConvexPolygon ConvexPolygon::translated(double dx, double dy) const {
  std::vector<Point2> pts = vertices_;
  for (Point2& p : pts) {
    p.x += dx;
    p.y += dy;
  }
  return ConvexPolygon(std::move(pts), Unchecked{});
}

ConvexPolygon ConvexPolygon::clip(const ConvexPolygon& window) const {
  std::vector<Point2> out = vertices_;
  const auto& w = window.vertices();
  for (std::size_t e = 0; e < w.size() && !out.empty(); ++e) {
    const Point2& a = w[e];
    const Point2& b = w[(e + 1) % w.size()];
    std::vector<Point2> next;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const Point2& p = out[k];
      const Point2& q = out[(k + 1) % out.size()];
      const int sp = orient2d(a, b, p);
      const int sq = orient2d(a, b, q);
      if (sp >= 0) next.push_back(p);
      if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
        const double dp = cross(a, b, p);
        const double dq = cross(a, b, q);
        const double s = dp / (dp - dq);
        next.push_back({p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)});
      }
    }
    out = weld(std::move(next));
  }
  if (out.size() < 3) return {};
  return ConvexPolygon(std::move(out), Unchecked{});
}

ShiftMonotonicityReport rectangle_shift_monotonicity(const ConvexPolygon& a, const Rect2& q, int count) {
  if (!a.origin_symmetric()) throw std::invalid_argument("rectangle_shift_monotonicity: A must be origin-symmetric");
  if (count < 2) throw std::invalid_argument("rectangle_shift_monotonicity: need at least two t values");
  if (!(q.x0 < q.x1 && q.y0 < q.y1)) throw std::invalid_argument("rectangle_shift_monotonicity: empty rectangle");
  ShiftMonotonicityReport report;
  const Point2 c = q.center();
  const ConvexPolygon base = q.polygon();
  for (int k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / (count - 1);
    report.t.push_back(t);
    report.area.push_back(a.clip(base.translated(-t * c.x, -t * c.y)).area());
  }
  for (std::size_t k = 0; k + 1 < report.area.size(); ++k) {
    report.max_decrease = std::max(report.max_decrease, report.area[k] - report.area[k + 1]);
  }
  report.monotone = report.max_decrease <= 1e-12;
  return report;
}

}  // namespace startomo
