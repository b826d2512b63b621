#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coopguard/geometry.hpp"

namespace coopguard::sim {

using geom::ConvexPolygon;
using geom::Point2;
using geom::Point3;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point provenance carried next to every return. Perception may only consult
// it where the modeled detector would fail (adversarial objects, relay
// noise); geometric reasoning never reads it.
enum class PointLabel : std::int32_t {
  kGround = -1,
  kInfrastructure = -2,
  kSpoofed = -3,
};
inline constexpr std::int32_t kFirstObstacleLabel = 0;

struct Obstacle {
  enum class Kind { kCylinder, kBox };

  Kind kind = Kind::kCylinder;
  int id = 0;
  Point2 center;            // footprint center
  double radius = 0.3;      // cylinders
  double half_extent_x = 0.5;  // boxes, axis-aligned
  double half_extent_y = 0.5;
  double height = 1.7;
  bool ao_flag = false;     // physically present, detector-invisible

  static Obstacle cylinder(int id, Point2 center, double radius, double height);
  static Obstacle box(int id, Point2 center, double hx, double hy, double height);

  ConvexPolygon footprint(int circle_sides = 32) const;
  /// Signed distance from a 2D point to the footprint boundary (< 0 inside).
  double footprint_signed_distance(Point2 p) const;
};

struct Wall {
  ConvexPolygon footprint;
  double height = 3.0;
};

struct Scene {
  std::vector<Obstacle> obstacles;
  std::vector<Wall> infrastructure;

  const Obstacle* find_obstacle(int id) const;
};

struct Pose {
  Point2 position;
  double heading = 0.0;  // radians, world frame
};

struct LidarConfig {
  std::vector<double> vertical_angles;  // radians, one per channel
  double horizontal_resolution = 0.4 * 0.017453292519943295;
  double max_range = 50.0;
  double sensor_height = 1.8;
  double noise_sigma = 0.01;
  double noise_bound = 0.03;        // zeta_n, noise samples clamped to +/- this
  double resolution_bound = 0.35;   // zeta_r

  /// 16 channels, -15..+15 degrees, 0.4 degree azimuth step.
  static LidarConfig standard16();
  /// Budget variant for large randomized sweeps: 8 channels, 1.2 deg step.
  static LidarConfig sweep8();

  int channels() const { return static_cast<int>(vertical_angles.size()); }
  double zeta_h() const { return noise_bound + resolution_bound; }
  /// zeta_r must dominate max_range * horizontal_resolution.
  bool resolution_bound_consistent() const;
};

struct ScanPoint {
  double range = 0.0;      // s^r, meters
  double azimuth = 0.0;    // s^a, radians, sensor frame
  double elevation = 0.0;  // s^phi, radians
  std::int32_t label = static_cast<std::int32_t>(PointLabel::kGround);
};

struct Scan {
  std::vector<ScanPoint> points;  // ordered by (channel, azimuth)
  Pose pose;
  LidarConfig config;
};

/// Cartesian point cloud expressed in `frame`. Sensor pose/height ride along
/// so downstream projections stay well-defined after re-framing.
struct Observation {
  std::vector<Point3> points;
  std::vector<std::int32_t> labels;  // parallel to points
  Pose frame;
  Pose sensor_pose;        // world frame
  double sensor_height = 1.8;
  double max_range = 50.0;
  double zeta_n = 0.03;
  double zeta_r = 0.35;

  double zeta_h() const { return zeta_n + zeta_r; }
  /// Sensor origin expressed in this observation's frame.
  Point3 sensor_origin_in_frame() const;
};

/// First intersection of a world-frame ray with the scene. Returns the hit
/// range and label, or nullopt when nothing is hit within max_range.
struct RayHit {
  double range = 0.0;
  std::int32_t label = 0;
};
std::optional<RayHit> cast_ray(const Scene& scene, Point3 origin, Point3 dir,
                               double max_range);

Scan cast_scan(const Scene& scene, const Pose& pose, const LidarConfig& cfg,
               std::uint64_t seed);

Observation to_observation(const Scan& scan, const Pose& target_pose);

/// Deterministic quasi-uniform sampling of the lateral surface and top,
/// density in points per square meter. Oracle support for containment tests.
std::vector<Point3> sample_obstacle_surface(const Obstacle& ob, double density);

double obstacle_surface_area(const Obstacle& ob);

/// World-frame <-> local-frame helpers.
Point3 world_to_frame(Point3 p, const Pose& frame);
Point3 frame_to_world(Point3 p, const Pose& frame);

}  // namespace coopguard::sim
