#pragma once

#include <set>
#include <vector>

#include "coopguard/geometry.hpp"
#include "coopguard/scene_lidar.hpp"

namespace coopguard::percep {

using geom::ConvexPolygon;
using geom::Point2;
using geom::Point3;
using sim::Observation;
using sim::Scene;

struct PerceptionConfig {
  double zeta_z = 0.1;            // ground/obstacle altitude threshold
  double cluster_distance = 0.5;  // single-linkage radius
  int min_cluster_size = 5;
  int scan_area_sides = 64;       // polygon resolution of the coverage disk
};

struct Aabb3 {
  Point3 min;
  Point3 max;

  bool contains(Point3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
};

struct DetectedObstacle {
  int index = 0;
  Aabb3 box;
  std::vector<Point3> points;
  std::vector<Point2> oblique;  // ground intersections of the sensor rays
  ConvexPolygon occupied;       // hull of vertical + oblique projections
};

struct AgentPerception {
  int agent_id = 0;
  std::vector<DetectedObstacle> detected;
  std::vector<Point3> residual_points;  // above-ground, no bounding box
  ConvexPolygon residual_area;          // Empty when residual is empty
  ConvexPolygon scan_area;              // coverage disk I_j
  double zeta_h = 0.38;
  sim::Pose sensor_pose;
  double sensor_height = 1.8;
};

struct GroundSplit {
  Observation ground;
  Observation above;
};

/// Removes points within 2 * zeta_n of any default-map wall surface.
Observation prune_infrastructure(const Observation& obs, const Scene& scene_map);

/// Inclusive partition: z <= zeta_z is ground.
GroundSplit remove_ground(const Observation& obs, double zeta_z);

struct DetectionResult {
  std::vector<DetectedObstacle> detected;
  Observation residual;
};

/// Single-linkage Euclidean clustering stand-in for the detector. Clusters
/// dominated by detector-invisible points (ao-flagged obstacles, relay
/// noise) yield no bounding box and fall into the residual.
DetectionResult detect_obstacles(const Observation& above,
                                 const PerceptionConfig& cfg,
                                 const std::set<int>& ao_ids);

/// Hull of vertical plus oblique projections of the cluster. Oblique ground
/// hits are clamped to max_range from the sensor. Degenerate clusters yield
/// a capsule polygon instead of failing.
ConvexPolygon occupied_area(Point3 sensor, const std::vector<Point3>& points,
                            double zeta_h, double max_range);

/// Full per-observation pipeline: prune, split ground, detect, project.
AgentPerception perceive_observation(int agent_id, const Observation& obs,
                                     const Scene& scene_map,
                                     const PerceptionConfig& cfg,
                                     const std::set<int>& ao_ids);

/// Pipeline over the own scan plus neighbor scans re-expressed in the own
/// frame. Element 0 is the perceiving agent.
std::vector<AgentPerception> perceive(
    const sim::Pose& own_frame, const sim::Scan& own_scan,
    const std::vector<sim::Scan>& neighbor_scans, const Scene& scene_map,
    const PerceptionConfig& cfg, const std::set<int>& ao_ids);

/// Same entry point for pre-translated observations (e.g. tampered ones).
std::vector<AgentPerception> perceive_observations(
    const std::vector<Observation>& observations, const Scene& scene_map,
    const PerceptionConfig& cfg, const std::set<int>& ao_ids);

}  // namespace coopguard::percep
