#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace coopguard::geom {

inline constexpr double kGeomEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
double dot(Point2 a, Point2 b);
double cross(Point2 a, Point2 b);
double norm(Point2 p);
double distance(Point2 a, Point2 b);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateRay : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class EmptyPolygon : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Closed half-plane {p : a.p + b <= 0} with unit outward normal a.
struct HalfPlane {
  Point2 normal;   // unit length
  double offset = 0.0;

  double eval(Point2 p) const { return normal.x * p.x + normal.y * p.y + offset; }
};

/// Convex polygon with counter-clockwise vertices and derived outward
/// half-planes. The Empty variant stands in for degenerate hulls and
/// disjoint intersections.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  static ConvexPolygon empty(bool degenerate = false);
  /// Vertices must already be a strictly convex CCW ring.
  static ConvexPolygon from_ccw_vertices(std::vector<Point2> vertices);

  bool is_empty() const { return vertices_.empty(); }
  bool from_degenerate_input() const { return degenerate_; }
  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<HalfPlane>& half_planes() const { return halfplanes_; }
  double area() const;
  Point2 centroid() const;

 private:
  std::vector<Point2> vertices_;
  std::vector<HalfPlane> halfplanes_;
  bool degenerate_ = false;
};

Point2 vertical_project(Point3 p);

/// Ground intersection of the ray from `sensor` through `p` (both above the
/// ground plane z = 0, sensor strictly higher than p).
Point2 oblique_project(Point3 sensor, Point3 p, double eps_z = 1e-6);

/// Monotone-chain hull with lexicographic tie-breaking. Fewer than three
/// affinely independent points yield Empty with the degeneracy flag set.
ConvexPolygon convex_hull(std::span<const Point2> points);
ConvexPolygon convex_hull(const std::vector<Point2>& points);

std::vector<HalfPlane> to_half_planes(const ConvexPolygon& poly);

/// True iff p lies in poly inflated outward by margin (a.p + b - margin <= 0
/// for every edge). The empty polygon contains nothing.
bool contains_with_margin(const ConvexPolygon& poly, Point2 p, double margin);

/// Exact clipping of a by b's half-planes.
ConvexPolygon intersect_convex(const ConvexPolygon& a, const ConvexPolygon& b);

/// Regular n-gon, used for scan-coverage disks and capsule caps.
ConvexPolygon regular_polygon(Point2 center, double radius, int sides);

/// Outward offset of every edge by `margin` (margin >= 0). Corners become
/// the intersection of the adjacent offset edges, so the result stays a
/// convex polygon with the same outward normals.
ConvexPolygon inflate(const ConvexPolygon& poly, double margin);

/// Rectangle-with-rounded-ends stand-in for a degenerate (collinear) point
/// cluster: segment [a, b] inflated by `radius`, eight vertices.
ConvexPolygon segment_capsule(Point2 a, Point2 b, double radius);

}  // namespace coopguard::geom
