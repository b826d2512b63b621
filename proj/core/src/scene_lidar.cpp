#include "coopguard/scene_lidar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace coopguard::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Smallest positive root of the quadratic for a ray against a vertical
// cylinder's lateral surface, plus the top-disk hit; z clipped to [0, h].
std::optional<double> ray_cylinder(Point3 o, Point3 d, Point2 c, double r,
                                   double h) {
  double best = std::numeric_limits<double>::infinity();
  const double ox = o.x - c.x;
  const double oy = o.y - c.y;
  const double a = d.x * d.x + d.y * d.y;
  if (a > 1e-15) {
    const double b = 2.0 * (ox * d.x + oy * d.y);
    const double cc = ox * ox + oy * oy - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t <= 1e-9) continue;
        const double z = o.z + t * d.z;
        if (z >= 0.0 && z <= h && t < best) best = t;
      }
    }
  }
  if (std::abs(d.z) > 1e-15) {
    const double t = (h - o.z) / d.z;
    if (t > 1e-9) {
      const double x = ox + t * d.x;
      const double y = oy + t * d.y;
      if (x * x + y * y <= r * r && t < best) best = t;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

std::optional<double> ray_box(Point3 o, Point3 d, Point2 c, double hx,
                              double hy, double h) {
  // Slab method over [c-h, c+h] x [0, h].
  double tmin = 1e-9;
  double tmax = std::numeric_limits<double>::infinity();
  const double lo[3] = {c.x - hx, c.y - hy, 0.0};
  const double hi[3] = {c.x + hx, c.y + hy, h};
  const double org[3] = {o.x, o.y, o.z};
  const double dir[3] = {d.x, d.y, d.z};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-15) {
      if (org[i] < lo[i] || org[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t0 = (lo[i] - org[i]) / dir[i];
    double t1 = (hi[i] - org[i]) / dir[i];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  return tmin;
}

std::optional<double> ray_wall(Point3 o, Point3 d, const Wall& wall) {
  // Extruded convex footprint: intersect the 2D ray against each edge
  // segment, keep hits whose z lands within the wall height.
  double best = std::numeric_limits<double>::infinity();
  const auto& verts = wall.footprint.vertices();
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = verts[i];
    const Point2 b = verts[(i + 1) % n];
    const Point2 e = b - a;
    const double denom = d.x * e.y - d.y * e.x;
    if (std::abs(denom) < 1e-15) continue;
    const double t = ((a.x - o.x) * e.y - (a.y - o.y) * e.x) / denom;
    const double s = ((a.x - o.x) * d.y - (a.y - o.y) * d.x) / denom;
    if (t <= 1e-9 || s < 0.0 || s > 1.0) continue;
    const double z = o.z + t * d.z;
    if (z >= 0.0 && z <= wall.height && t < best) best = t;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

}  // namespace

Obstacle Obstacle::cylinder(int id, Point2 center, double radius,
                            double height) {
  Obstacle ob;
  ob.kind = Kind::kCylinder;
  ob.id = id;
  ob.center = center;
  ob.radius = radius;
  ob.height = height;
  return ob;
}

Obstacle Obstacle::box(int id, Point2 center, double hx, double hy,
                       double height) {
  Obstacle ob;
  ob.kind = Kind::kBox;
  ob.id = id;
  ob.center = center;
  ob.half_extent_x = hx;
  ob.half_extent_y = hy;
  ob.height = height;
  return ob;
}

ConvexPolygon Obstacle::footprint(int circle_sides) const {
  if (kind == Kind::kCylinder) {
    return geom::regular_polygon(center, radius, circle_sides);
  }
  return ConvexPolygon::from_ccw_vertices(
      {{center.x - half_extent_x, center.y - half_extent_y},
       {center.x + half_extent_x, center.y - half_extent_y},
       {center.x + half_extent_x, center.y + half_extent_y},
       {center.x - half_extent_x, center.y + half_extent_y}});
}

double Obstacle::footprint_signed_distance(Point2 p) const {
  if (kind == Kind::kCylinder) {
    return geom::distance(p, center) - radius;
  }
  const double dx = std::abs(p.x - center.x) - half_extent_x;
  const double dy = std::abs(p.y - center.y) - half_extent_y;
  if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
  return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

const Obstacle* Scene::find_obstacle(int id) const {
  for (const Obstacle& ob : obstacles) {
    if (ob.id == id) return &ob;
  }
  return nullptr;
}

LidarConfig LidarConfig::standard16() {
  LidarConfig cfg;
  for (int i = 0; i < 16; ++i) {
    cfg.vertical_angles.push_back((-15.0 + 2.0 * i) * kDeg);
  }
  return cfg;
}

LidarConfig LidarConfig::sweep8() {
  LidarConfig cfg;
  for (int i = 0; i < 8; ++i) {
    cfg.vertical_angles.push_back((-14.0 + 4.0 * i) * kDeg);
  }
  cfg.horizontal_resolution = 1.2 * kDeg;
  cfg.max_range = 30.0;
  cfg.resolution_bound = 0.65;
  return cfg;
}

bool LidarConfig::resolution_bound_consistent() const {
  return resolution_bound >= max_range * horizontal_resolution;
}

Point3 world_to_frame(Point3 p, const Pose& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  const double dx = p.x - frame.position.x;
  const double dy = p.y - frame.position.y;
  return {c * dx + s * dy, -s * dx + c * dy, p.z};
}

Point3 frame_to_world(Point3 p, const Pose& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.position.x + c * p.x - s * p.y,
          frame.position.y + s * p.x + c * p.y, p.z};
}

Point3 Observation::sensor_origin_in_frame() const {
  return world_to_frame(
      {sensor_pose.position.x, sensor_pose.position.y, sensor_height}, frame);
}

std::optional<RayHit> cast_ray(const Scene& scene, Point3 origin, Point3 dir,
                               double max_range) {
  double best = std::numeric_limits<double>::infinity();
  std::int32_t label = 0;
  for (const Obstacle& ob : scene.obstacles) {
    std::optional<double> t =
        ob.kind == Obstacle::Kind::kCylinder
            ? ray_cylinder(origin, dir, ob.center, ob.radius, ob.height)
            : ray_box(origin, dir, ob.center, ob.half_extent_x,
                      ob.half_extent_y, ob.height);
    if (t && *t < best) {
      best = *t;
      label = ob.id;
    }
  }
  for (const Wall& wall : scene.infrastructure) {
    if (auto t = ray_wall(origin, dir, wall); t && *t < best) {
      best = *t;
      label = static_cast<std::int32_t>(PointLabel::kInfrastructure);
    }
  }
  if (dir.z < -1e-15) {
    const double t = -origin.z / dir.z;
    if (t > 1e-9 && t < best) {
      best = t;
      label = static_cast<std::int32_t>(PointLabel::kGround);
    }
  }
  if (!std::isfinite(best) || best > max_range) return std::nullopt;
  return RayHit{best, label};
}

Scan cast_scan(const Scene& scene, const Pose& pose, const LidarConfig& cfg,
               std::uint64_t seed) {
  for (const Obstacle& ob : scene.obstacles) {
    if (ob.footprint_signed_distance(pose.position) <= 0.0) {
      throw SimulationError("cast_scan: sensor inside obstacle footprint");
    }
  }
  const Point3 origin{pose.position.x, pose.position.y, cfg.sensor_height};
  const int steps = static_cast<int>(
      std::floor(2.0 * std::numbers::pi / cfg.horizontal_resolution));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scan scan;
  scan.pose = pose;
  scan.config = cfg;
  scan.points.reserve(static_cast<std::size_t>(steps));
  for (double elevation : cfg.vertical_angles) {
    const double ce = std::cos(elevation);
    const double se = std::sin(elevation);
    for (int i = 0; i < steps; ++i) {
      const double azimuth = i * cfg.horizontal_resolution;
      const double world_az = pose.heading + azimuth;
      const Point3 dir{ce * std::cos(world_az), ce * std::sin(world_az), se};
      const auto hit = cast_ray(scene, origin, dir, cfg.max_range);
      // The noise draw is consumed per-ray regardless of hit so that scans
      // of edited scenes stay aligned ray-for-ray under one seed.
      double noise = cfg.noise_sigma > 0.0 ? gauss(rng) * cfg.noise_sigma : 0.0;
      if (!hit) continue;
      noise = std::clamp(noise, -cfg.noise_bound, cfg.noise_bound);
      double range = hit->range + noise;
      if (range <= 0.0 || range > cfg.max_range) continue;
      scan.points.push_back({range, azimuth, elevation, hit->label});
    }
  }
  return scan;
}

Observation to_observation(const Scan& scan, const Pose& target_pose) {
  Observation obs;
  obs.frame = target_pose;
  obs.sensor_pose = scan.pose;
  obs.sensor_height = scan.config.sensor_height;
  obs.max_range = scan.config.max_range;
  obs.zeta_n = scan.config.noise_bound;
  obs.zeta_r = scan.config.resolution_bound;
  obs.points.reserve(scan.points.size());
  obs.labels.reserve(scan.points.size());
  for (const ScanPoint& p : scan.points) {
    const double ce = std::cos(p.elevation);
    const Point3 local{p.range * ce * std::cos(p.azimuth),
                       p.range * ce * std::sin(p.azimuth),
                       scan.config.sensor_height + p.range * std::sin(p.elevation)};
    const Point3 world = frame_to_world(local, scan.pose);
    obs.points.push_back(world_to_frame(world, target_pose));
    obs.labels.push_back(p.label);
  }
  return obs;
}

double obstacle_surface_area(const Obstacle& ob) {
  if (ob.kind == Obstacle::Kind::kCylinder) {
    return 2.0 * std::numbers::pi * ob.radius * ob.height +
           std::numbers::pi * ob.radius * ob.radius;
  }
  const double wx = 2.0 * ob.half_extent_x;
  const double wy = 2.0 * ob.half_extent_y;
  return 2.0 * (wx + wy) * ob.height + wx * wy;
}

std::vector<Point3> sample_obstacle_surface(const Obstacle& ob,
                                            double density) {
  if (density <= 0.0) {
    throw SimulationError("sample_obstacle_surface: density must be positive");
  }
  // Cell-centered grids keep the sample count close to area * density.
  const double step = 1.0 / std::sqrt(density);
  auto cells = [&](double extent) {
    return std::max(1, static_cast<int>(std::llround(extent / step)));
  };
  std::vector<Point3> out;
  const int nz = cells(ob.height);
  if (ob.kind == Obstacle::Kind::kCylinder) {
    const double circ = 2.0 * std::numbers::pi * ob.radius;
    const int na = std::max(4, cells(circ));
    for (int iz = 0; iz < nz; ++iz) {
      const double z = ob.height * (iz + 0.5) / nz;
      for (int ia = 0; ia < na; ++ia) {
        const double a = 2.0 * std::numbers::pi * ia / na;
        out.push_back({ob.center.x + ob.radius * std::cos(a),
                       ob.center.y + ob.radius * std::sin(a), z});
      }
    }
    // Top disk as concentric rings.
    const int nr = cells(ob.radius);
    for (int ir = 0; ir < nr; ++ir) {
      const double r = ob.radius * (ir + 0.5) / nr;
      const int nc = std::max(4, cells(2.0 * std::numbers::pi * r));
      for (int ic = 0; ic < nc; ++ic) {
        const double a = 2.0 * std::numbers::pi * ic / nc;
        out.push_back({ob.center.x + r * std::cos(a),
                       ob.center.y + r * std::sin(a), ob.height});
      }
    }
    return out;
  }
  const double x0 = ob.center.x - ob.half_extent_x;
  const double y0 = ob.center.y - ob.half_extent_y;
  const double wx = 2.0 * ob.half_extent_x;
  const double wy = 2.0 * ob.half_extent_y;
  const int nx = cells(wx);
  const int ny = cells(wy);
  for (int iz = 0; iz < nz; ++iz) {
    const double z = ob.height * (iz + 0.5) / nz;
    for (int i = 0; i < nx; ++i) {
      const double x = x0 + wx * (i + 0.5) / nx;
      out.push_back({x, y0, z});
      out.push_back({x, y0 + wy, z});
    }
    for (int i = 0; i < ny; ++i) {
      const double y = y0 + wy * (i + 0.5) / ny;
      out.push_back({x0, y, z});
      out.push_back({x0 + wx, y, z});
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      out.push_back({x0 + wx * (i + 0.5) / nx, y0 + wy * (j + 0.5) / ny,
                     ob.height});
    }
  }
  return out;
}

}  // namespace coopguard::sim
