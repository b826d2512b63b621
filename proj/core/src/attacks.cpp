#include "coopguard/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace coopguard::atk {

namespace {

using geom::Point2;
using geom::Point3;

// Entry distance of the ray o + t*d into the cylinder volume, if any.
std::optional<double> ray_enters_cylinder(Point3 o, Point3 d,
                                          const NoiseCylinder& cyl) {
  const double ox = o.x - cyl.center.x;
  const double oy = o.y - cyl.center.y;
  const double a = d.x * d.x + d.y * d.y;
  if (a < 1e-15) return std::nullopt;
  const double b = 2.0 * (ox * d.x + oy * d.y);
  const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t0 = (-b - sq) / (2.0 * a);
  double t1 = (-b + sq) / (2.0 * a);
  if (t1 <= 1e-9) return std::nullopt;
  // Clip the in-footprint interval against the height band [0, h].
  t0 = std::max(t0, 1e-9);
  double z0 = o.z + t0 * d.z;
  double z1 = o.z + t1 * d.z;
  if (std::abs(d.z) > 1e-15) {
    double ta = (0.0 - o.z) / d.z;
    double tb = (cyl.height - o.z) / d.z;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  } else if (o.z < 0.0 || o.z > cyl.height) {
    return std::nullopt;
  }
  (void)z0;
  (void)z1;
  return t0;
}

struct SensorRay {
  Point3 origin;  // world frame
  Point3 dir;     // unit
  double range;
};

// Reconstruct the world-frame ray that produced an observation point.
SensorRay ray_to_point(const Observation& obs, std::size_t i) {
  const Point3 world = sim::frame_to_world(obs.points[i], obs.frame);
  const Point3 origin{obs.sensor_pose.position.x, obs.sensor_pose.position.y,
                      obs.sensor_height};
  Point3 d{world.x - origin.x, world.y - origin.y, world.z - origin.z};
  const double r = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  return {origin, {d.x / r, d.y / r, d.z / r}, r};
}

}  // namespace

TamperedObservation apply_neo(const Observation& obs, const Obstacle& fake,
                              const LidarConfig& cfg, std::uint64_t seed,
                              bool superpose) {
  const double dist = geom::distance(obs.sensor_pose.position, fake.center);
  if (dist - std::max({fake.radius, fake.half_extent_x, fake.half_extent_y}) >
      cfg.max_range) {
    throw AttackError("apply_neo: fake obstacle out of view");
  }

  TamperedObservation out;
  out.spec.kind = AttackSpec::Kind::kNeo;
  out.spec.neo_fake = fake;
  out.spec.seed = seed;
  out.spec.neo_superpose = superpose;
  out.observation = obs;
  out.observation.points.clear();
  out.observation.labels.clear();

  Scene fake_only;
  fake_only.obstacles.push_back(fake);

  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    if (!superpose) {
      const SensorRay ray = ray_to_point(obs, i);
      const auto hit =
          sim::cast_ray(fake_only, ray.origin, ray.dir, cfg.max_range);
      if (hit && hit->range < ray.range - 1e-9) continue;  // spoof arrives first
    }
    out.observation.points.push_back(obs.points[i]);
    out.observation.labels.push_back(obs.labels[i]);
  }

  // The injected cloud is exactly what a noiseless sensor would return from
  // the fake obstacle alone, so single-scan heuristics cannot reveal it.
  LidarConfig clean = cfg;
  clean.noise_sigma = 0.0;
  const sim::Scan ghost = sim::cast_scan(fake_only, obs.sensor_pose, clean, seed);
  const Observation ghost_obs = sim::to_observation(ghost, obs.frame);
  for (std::size_t i = 0; i < ghost_obs.points.size(); ++i) {
    if (ghost_obs.labels[i] != fake.id) continue;  // keep obstacle returns only
    out.injected_indices.push_back(out.observation.points.size());
    out.observation.points.push_back(ghost_obs.points[i]);
    out.observation.labels.push_back(fake.id);
  }
  return out;
}

TamperedObservation apply_pra(const Observation& obs, const NoiseCylinder& cyl,
                              std::uint64_t seed) {
  TamperedObservation out;
  out.spec.kind = AttackSpec::Kind::kPra;
  out.spec.pra_cylinder = cyl;
  out.spec.seed = seed;
  out.observation = obs;
  out.observation.points.clear();
  out.observation.labels.clear();

  std::size_t affected_rays = 0;
  bool hid_obstacle_point = false;
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    const SensorRay ray = ray_to_point(obs, i);
    const auto entry = ray_enters_cylinder(ray.origin, ray.dir, cyl);
    if (entry && *entry < ray.range - 1e-9) {
      ++affected_rays;
      if (obs.labels[i] >= sim::kFirstObstacleLabel) hid_obstacle_point = true;
      continue;  // true return discarded by the receiver
    }
    out.observation.points.push_back(obs.points[i]);
    out.observation.labels.push_back(obs.labels[i]);
  }
  if (!hid_obstacle_point) {
    throw AttackError("apply_pra: no obstacle return behind the noise cylinder");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma_xy = cyl.radius / 2.0;
  for (std::size_t i = 0; i < affected_rays; ++i) {
    double dx = std::clamp(gauss(rng) * sigma_xy, -cyl.radius, cyl.radius);
    double dy = std::clamp(gauss(rng) * sigma_xy, -cyl.radius, cyl.radius);
    const double rad = std::hypot(dx, dy);
    if (rad > cyl.radius) {
      dx *= cyl.radius / rad;
      dy *= cyl.radius / rad;
    }
    const double z = std::clamp(cyl.height / 2.0 + gauss(rng) * cyl.height / 4.0,
                                0.02, cyl.height);
    const Point3 world{cyl.center.x + dx, cyl.center.y + dy, z};
    out.injected_indices.push_back(out.observation.points.size());
    out.observation.points.push_back(sim::world_to_frame(world, obs.frame));
    out.observation.labels.push_back(
        static_cast<std::int32_t>(sim::PointLabel::kSpoofed));
  }
  return out;
}

Scene apply_ao(const Scene& scene, int target_id) {
  Scene edited = scene;
  for (Obstacle& ob : edited.obstacles) {
    if (ob.id == target_id) {
      ob.ao_flag = true;
      return edited;
    }
  }
  throw AttackError("apply_ao: unknown obstacle id");
}

int classify_pra_ground_truth(const NoiseCylinder& cyl, const Scene& scene,
                              const Pose& victim_pose, const Pose& helper_pose,
                              const LidarConfig& cfg) {
  const Point3 helper{helper_pose.position.x, helper_pose.position.y,
                      cfg.sensor_height};
  const Point3 victim{victim_pose.position.x, victim_pose.position.y,
                      cfg.sensor_height};
  std::size_t visible = 0;
  std::size_t total = 0;
  // Deterministic polar grid through the cylinder volume.
  const int nr = 4, na = 16, nz = 5;
  for (int ir = 0; ir < nr; ++ir) {
    const double r = cyl.radius * (ir + 0.5) / nr;
    for (int ia = 0; ia < na; ++ia) {
      const double a = 2.0 * std::numbers::pi * ia / na;
      for (int iz = 0; iz < nz; ++iz) {
        const Point3 q{cyl.center.x + r * std::cos(a),
                       cyl.center.y + r * std::sin(a),
                       cyl.height * (iz + 0.5) / nz};
        ++total;
        Point3 d{q.x - helper.x, q.y - helper.y, q.z - helper.z};
        const double dist = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
        if (dist > cfg.max_range) continue;
        d = {d.x / dist, d.y / dist, d.z / dist};
        const auto hit = sim::cast_ray(scene, helper, d, cfg.max_range);
        if (hit && hit->range < dist - 1e-6) continue;  // occluded
        // A helper on the victim's own sight line adds no independent view
        // of this point; require nonzero parallax.
        const Point3 v{q.x - victim.x, q.y - victim.y, q.z - victim.z};
        const double vn = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
        const double cx = d.y * v.z - d.z * v.y;
        const double cy = d.z * v.x - d.x * v.z;
        const double cz = d.x * v.y - d.y * v.x;
        const double sin_par = std::sqrt(cx * cx + cy * cy + cz * cz) / vn;
        if (sin_par <= 1e-9) continue;
        ++visible;
      }
    }
  }
  if (visible == total) return 1;
  if (visible == 0) return 3;
  return 2;
}

}  // namespace coopguard::atk
