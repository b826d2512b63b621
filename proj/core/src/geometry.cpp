#include "coopguard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coopguard::geom {

double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 p) { return std::hypot(p.x, p.y); }
double distance(Point2 a, Point2 b) { return norm(a - b); }

ConvexPolygon ConvexPolygon::empty(bool degenerate) {
  ConvexPolygon poly;
  poly.degenerate_ = degenerate;
  return poly;
}

ConvexPolygon ConvexPolygon::from_ccw_vertices(std::vector<Point2> vertices) {
  ConvexPolygon poly;
  if (vertices.size() < 3) return empty(!vertices.empty());
  poly.vertices_ = std::move(vertices);
  const std::size_t n = poly.vertices_.size();
  poly.halfplanes_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly.vertices_[i];
    const Point2 b = poly.vertices_[(i + 1) % n];
    const Point2 edge = b - a;
    const double len = norm(edge);
    // Outward normal for a CCW ring is the edge rotated by -90 degrees.
    const Point2 normal{edge.y / len, -edge.x / len};
    poly.halfplanes_.push_back({normal, -dot(normal, a)});
  }
  return poly;
}

double ConvexPolygon::area() const {
  double twice = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(vertices_[i], vertices_[(i + 1) % n]);
  }
  return 0.5 * twice;
}

Point2 ConvexPolygon::centroid() const {
  if (vertices_.empty()) throw EmptyPolygon("centroid of empty polygon");
  Point2 acc{0.0, 0.0};
  for (const Point2& v : vertices_) acc = acc + v;
  return (1.0 / static_cast<double>(vertices_.size())) * acc;
}

Point2 vertical_project(Point3 p) { return {p.x, p.y}; }

Point2 oblique_project(Point3 sensor, Point3 p, double eps_z) {
  const double drop = sensor.z - p.z;
  if (drop <= eps_z) {
    throw DegenerateRay("oblique_project: ray nearly parallel to ground");
  }
  const double t = sensor.z / drop;
  return {sensor.x + t * (p.x - sensor.x), sensor.y + t * (p.y - sensor.y)};
}

ConvexPolygon convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Point2 a, Point2 b) {
                          return std::abs(a.x - b.x) <= kGeomEps &&
                                 std::abs(a.y - b.y) <= kGeomEps;
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return ConvexPolygon::empty(n > 0);

  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 &&
           cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= kGeomEps) {
      --k;
    }
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {  // upper chain
    while (k >= lower &&
           cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= kGeomEps) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return ConvexPolygon::empty(true);
  return ConvexPolygon::from_ccw_vertices(std::move(hull));
}

ConvexPolygon convex_hull(const std::vector<Point2>& points) {
  return convex_hull(std::span<const Point2>(points));
}

std::vector<HalfPlane> to_half_planes(const ConvexPolygon& poly) {
  if (poly.is_empty()) throw EmptyPolygon("to_half_planes: empty polygon");
  return poly.half_planes();
}

bool contains_with_margin(const ConvexPolygon& poly, Point2 p, double margin) {
  if (poly.is_empty()) return false;
  for (const HalfPlane& h : poly.half_planes()) {
    if (h.eval(p) - margin > 0.0) return false;
  }
  return true;
}

ConvexPolygon intersect_convex(const ConvexPolygon& a, const ConvexPolygon& b) {
  if (a.is_empty() || b.is_empty()) return ConvexPolygon::empty();
  std::vector<Point2> ring = a.vertices();
  for (const HalfPlane& h : b.half_planes()) {
    std::vector<Point2> clipped;
    clipped.reserve(ring.size() + 1);
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 cur = ring[i];
      const Point2 nxt = ring[(i + 1) % n];
      const double dc = h.eval(cur);
      const double dn = h.eval(nxt);
      if (dc <= kGeomEps) clipped.push_back(cur);
      if ((dc < -kGeomEps && dn > kGeomEps) || (dc > kGeomEps && dn < -kGeomEps)) {
        const double t = dc / (dc - dn);
        clipped.push_back(cur + t * (nxt - cur));
      }
    }
    ring = std::move(clipped);
    if (ring.size() < 3) return ConvexPolygon::empty();
  }
  // Clipping can introduce duplicate or collinear vertices; re-hull to keep
  // the strict-convexity invariant.
  return convex_hull(ring);
}

ConvexPolygon inflate(const ConvexPolygon& poly, double margin) {
  if (poly.is_empty()) return ConvexPolygon::empty(poly.from_degenerate_input());
  if (margin < 0.0) throw GeometryError("inflate: negative margin");
  if (margin == 0.0) return poly;
  const auto& v = poly.vertices();
  const auto& h = poly.half_planes();
  const std::size_t n = v.size();
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Vertex i joins edge i-1 and edge i; offsetting both half-planes by
    // `margin` moves it along the normal bisector.
    const Point2 na = h[(i + n - 1) % n].normal;
    const Point2 nb = h[i].normal;
    const double denom = 1.0 + dot(na, nb);
    out.push_back(v[i] + (margin / denom) * (na + nb));
  }
  return ConvexPolygon::from_ccw_vertices(std::move(out));
}

ConvexPolygon regular_polygon(Point2 center, double radius, int sides) {
  std::vector<Point2> verts;
  verts.reserve(static_cast<std::size_t>(sides));
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(sides);
    verts.push_back({center.x + radius * std::cos(a),
                     center.y + radius * std::sin(a)});
  }
  return ConvexPolygon::from_ccw_vertices(std::move(verts));
}

ConvexPolygon segment_capsule(Point2 a, Point2 b, double radius) {
  Point2 axis = b - a;
  double len = norm(axis);
  if (len <= kGeomEps) {
    return regular_polygon(a, radius, 8);
  }
  const double base = std::atan2(axis.y / len, axis.x / len);
  // Four points per semicircular cap, eight vertices total.
  std::vector<Point2> verts;
  verts.reserve(8);
  for (int i = 0; i < 4; ++i) {
    const double ang = base + std::numbers::pi * (0.5 + (2.0 * i + 1.0) / 8.0);
    verts.push_back({a.x + radius * std::cos(ang), a.y + radius * std::sin(ang)});
  }
  for (int i = 0; i < 4; ++i) {
    const double ang = base - std::numbers::pi * (0.5 - (2.0 * i + 1.0) / 8.0);
    verts.push_back({b.x + radius * std::cos(ang), b.y + radius * std::sin(ang)});
  }
  return convex_hull(verts);
}

}  // namespace coopguard::geom
