#pragma once

#include <array>
#include <vector>

namespace startomo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Sign of the orientation determinant of (a, b, c): +1 counterclockwise,
/// -1 clockwise, 0 collinear. A floating-point filter decides clear cases;
/// near-degenerate ones are re-evaluated in exact rational arithmetic.
int orient2d(const Point2& a, const Point2& b, const Point2& c);

/// Convex polygon with counterclockwise vertices (possibly empty after
/// clipping).
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  /// Validates strict convexity, counterclockwise order and positive area.
  explicit ConvexPolygon(std::vector<Point2> vertices);

  static ConvexPolygon rectangle(double x0, double x1, double y0, double y1);
  static ConvexPolygon regular(int sides, double radius, double phase = 0.0);

  const std::vector<Point2>& vertices() const { return vertices_; }
  bool empty() const { return vertices_.size() < 3; }
  double area() const;
  bool contains(const Point2& p) const;
  /// Vertex set closed under p -> -p within tol.
  bool origin_symmetric(double tol = 1e-12) const;
  ConvexPolygon translated(double dx, double dy) const;

  /// Intersection with another convex polygon (Sutherland-Hodgman). Output
  /// vertices closer than 1e-12 are welded.
  ConvexPolygon clip(const ConvexPolygon& window) const;

 private:
  struct Unchecked {};
  ConvexPolygon(std::vector<Point2> vertices, Unchecked) : vertices_(std::move(vertices)) {}
  std::vector<Point2> vertices_;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1] with non-empty interior.
struct Rect2 {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  Point2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  ConvexPolygon polygon() const { return ConvexPolygon::rectangle(x0, x1, y0, y1); }
};

struct ShiftMonotonicityReport {
  std::vector<double> t;
  std::vector<double> area;
  /// Largest drop area[k] - area[k+1] (0 if none).
  double max_decrease = 0.0;
  bool monotone = true;
};

/// Areas of A cap (Q - t c(Q)) on t = k / (count - 1); monotone when no drop
/// exceeds 1e-12. A must be origin-symmetric.
ShiftMonotonicityReport rectangle_shift_monotonicity(const ConvexPolygon& a, const Rect2& q, int count);

}  // namespace startomo
