#include "coopguard/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coopguard::percep {

namespace {

// Union-find over point indices for single-linkage clustering.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

double dist3(Point3 a, Point3 b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

// Distance from a 2D point to a convex polygon (0 inside).
double distance_to_polygon(const ConvexPolygon& poly, Point2 p) {
  if (poly.is_empty()) return std::numeric_limits<double>::infinity();
  if (geom::contains_with_margin(poly, p, 0.0)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    const Point2 e = b - a;
    const double len2 = geom::dot(e, e);
    const double t = len2 > 0.0
                         ? std::clamp(geom::dot(p - a, e) / len2, 0.0, 1.0)
                         : 0.0;
    best = std::min(best, geom::distance(p, a + t * e));
  }
  return best;
}

}  // namespace

Observation prune_infrastructure(const Observation& obs,
                                 const Scene& scene_map) {
  if (scene_map.infrastructure.empty()) return obs;
  Observation out = obs;
  out.points.clear();
  out.labels.clear();
  const double tol = 2.0 * obs.zeta_n;
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    const Point3 world = sim::frame_to_world(obs.points[i], obs.frame);
    bool near_wall = false;
    for (const sim::Wall& wall : scene_map.infrastructure) {
      if (world.z > wall.height + tol) continue;
      if (distance_to_polygon(wall.footprint, {world.x, world.y}) <= tol) {
        near_wall = true;
        break;
      }
    }
    if (near_wall) continue;
    out.points.push_back(obs.points[i]);
    out.labels.push_back(obs.labels[i]);
  }
  return out;
}

GroundSplit remove_ground(const Observation& obs, double zeta_z) {
  GroundSplit split{obs, obs};
  split.ground.points.clear();
  split.ground.labels.clear();
  split.above.points.clear();
  split.above.labels.clear();
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    // Altitude is judged in the world frame; observation frames share z.
    if (obs.points[i].z <= zeta_z) {
      split.ground.points.push_back(obs.points[i]);
      split.ground.labels.push_back(obs.labels[i]);
    } else {
      split.above.points.push_back(obs.points[i]);
      split.above.labels.push_back(obs.labels[i]);
    }
  }
  return split;
}

DetectionResult detect_obstacles(const Observation& above,
                                 const PerceptionConfig& cfg,
                                 const std::set<int>& ao_ids) {
  DetectionResult result;
  result.residual = above;
  result.residual.points.clear();
  result.residual.labels.clear();

  const std::size_t n = above.points.size();
  if (n == 0) return result;

  DisjointSet ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist3(above.points[i], above.points[j]) <= cfg.cluster_distance) {
        ds.unite(i, j);
      }
    }
  }
  std::vector<std::vector<std::size_t>> clusters;
  {
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t root = ds.find(i);
      if (slot[root] < 0) {
        slot[root] = static_cast<long>(clusters.size());
        clusters.emplace_back();
      }
      clusters[static_cast<std::size_t>(slot[root])].push_back(i);
    }
  }

  for (const auto& cluster : clusters) {
    std::size_t invisible = 0;
    for (std::size_t i : cluster) {
      const std::int32_t label = above.labels[i];
      if (label == static_cast<std::int32_t>(sim::PointLabel::kSpoofed) ||
          (label >= sim::kFirstObstacleLabel && ao_ids.contains(label))) {
        ++invisible;
      }
    }
    const bool detector_blind = 2 * invisible > cluster.size();
    if (cluster.size() < static_cast<std::size_t>(cfg.min_cluster_size) ||
        detector_blind) {
      for (std::size_t i : cluster) {
        result.residual.points.push_back(above.points[i]);
        result.residual.labels.push_back(above.labels[i]);
      }
      continue;
    }
    DetectedObstacle det;
    det.index = static_cast<int>(result.detected.size());
    det.box.min = {std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
    det.box.max = {-std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (std::size_t i : cluster) {
      const Point3 p = above.points[i];
      det.points.push_back(p);
      det.box.min = {std::min(det.box.min.x, p.x), std::min(det.box.min.y, p.y),
                     std::min(det.box.min.z, p.z)};
      det.box.max = {std::max(det.box.max.x, p.x), std::max(det.box.max.y, p.y),
                     std::max(det.box.max.z, p.z)};
    }
    result.detected.push_back(std::move(det));
  }
  return result;
}

ConvexPolygon occupied_area(Point3 sensor, const std::vector<Point3>& points,
                            double zeta_h, double max_range) {
  std::vector<Point2> projected;
  projected.reserve(points.size() * 2);
  const Point2 sensor_xy{sensor.x, sensor.y};
  for (const Point3& p : points) {
    const Point2 vp = geom::vertical_project(p);
    projected.push_back(vp);
    if (p.z >= sensor.z - 1e-6) continue;  // at/above sensor: no ground shadow
    Point2 op = geom::oblique_project(sensor, p);
    // Clamp the shadow endpoint to the sensing range.
    const double d = geom::distance(op, sensor_xy);
    if (d > max_range) {
      op = sensor_xy + (max_range / d) * (op - sensor_xy);
    }
    projected.push_back(op);
  }
  ConvexPolygon hull = geom::convex_hull(projected);
  if (!hull.is_empty()) return hull;
  if (projected.empty()) return ConvexPolygon::empty();
  // Collinear cluster: inflate the extreme segment into a capsule.
  Point2 lo = projected.front();
  Point2 hi = projected.front();
  for (const Point2& p : projected) {
    if (p.x < lo.x || (p.x == lo.x && p.y < lo.y)) lo = p;
    if (p.x > hi.x || (p.x == hi.x && p.y > hi.y)) hi = p;
  }
  return geom::segment_capsule(lo, hi, std::max(zeta_h, 1e-3));
}

AgentPerception perceive_observation(int agent_id, const Observation& obs,
                                     const Scene& scene_map,
                                     const PerceptionConfig& cfg,
                                     const std::set<int>& ao_ids) {
  AgentPerception ap;
  ap.agent_id = agent_id;
  ap.zeta_h = obs.zeta_h();
  ap.sensor_pose = obs.sensor_pose;
  ap.sensor_height = obs.sensor_height;

  const Observation pruned = prune_infrastructure(obs, scene_map);
  const GroundSplit split = remove_ground(pruned, cfg.zeta_z);
  DetectionResult det = detect_obstacles(split.above, cfg, ao_ids);

  const Point3 sensor = obs.sensor_origin_in_frame();
  for (DetectedObstacle& d : det.detected) {
    for (const Point3& p : d.points) {
      if (p.z < sensor.z - 1e-6) {
        Point2 op = geom::oblique_project(sensor, p);
        const Point2 sensor_xy{sensor.x, sensor.y};
        const double dist = geom::distance(op, sensor_xy);
        if (dist > obs.max_range) {
          op = sensor_xy + (obs.max_range / dist) * (op - sensor_xy);
        }
        d.oblique.push_back(op);
      }
    }
    d.occupied = occupied_area(sensor, d.points, ap.zeta_h, obs.max_range);
    ap.detected.push_back(std::move(d));
  }

  // Residual points whose projection already falls inside a detected
  // obstacle's occupied area (margin zeta_h) are attributed to that
  // obstacle: they are a detector-granularity artifact (grazing returns,
  // sub-threshold satellite groups), not unexplained geometry.
  std::vector<Point3> unexplained;
  std::vector<std::int32_t> unexplained_labels;
  std::vector<bool> grew(ap.detected.size(), false);
  for (std::size_t i = 0; i < det.residual.points.size(); ++i) {
    const Point3 p = det.residual.points[i];
    bool absorbed = false;
    for (std::size_t k = 0; k < ap.detected.size(); ++k) {
      if (geom::contains_with_margin(ap.detected[k].occupied,
                                     geom::vertical_project(p), ap.zeta_h)) {
        DetectedObstacle& d = ap.detected[k];
        d.points.push_back(p);
        d.box.min = {std::min(d.box.min.x, p.x), std::min(d.box.min.y, p.y),
                     std::min(d.box.min.z, p.z)};
        d.box.max = {std::max(d.box.max.x, p.x), std::max(d.box.max.y, p.y),
                     std::max(d.box.max.z, p.z)};
        grew[k] = true;
        absorbed = true;
        break;
      }
    }
    if (!absorbed) {
      unexplained.push_back(p);
      unexplained_labels.push_back(det.residual.labels[i]);
    }
  }
  for (std::size_t k = 0; k < ap.detected.size(); ++k) {
    if (!grew[k]) continue;
    DetectedObstacle& d = ap.detected[k];
    d.oblique.clear();
    for (const Point3& p : d.points) {
      if (p.z < sensor.z - 1e-6) {
        Point2 op = geom::oblique_project(sensor, p);
        const Point2 sensor_xy{sensor.x, sensor.y};
        const double dist = geom::distance(op, sensor_xy);
        if (dist > obs.max_range) {
          op = sensor_xy + (obs.max_range / dist) * (op - sensor_xy);
        }
        d.oblique.push_back(op);
      }
    }
    d.occupied = occupied_area(sensor, d.points, ap.zeta_h, obs.max_range);
  }
  det.residual.points = std::move(unexplained);
  det.residual.labels = std::move(unexplained_labels);

  ap.residual_points = det.residual.points;
  ap.residual_area = ap.residual_points.empty()
                         ? ConvexPolygon::empty()
                         : occupied_area(sensor, ap.residual_points, ap.zeta_h,
                                         obs.max_range);
  ap.scan_area = geom::regular_polygon({sensor.x, sensor.y}, obs.max_range,
                                       cfg.scan_area_sides);
  return ap;
}

std::vector<AgentPerception> perceive_observations(
    const std::vector<Observation>& observations, const Scene& scene_map,
    const PerceptionConfig& cfg, const std::set<int>& ao_ids) {
  std::vector<AgentPerception> out;
  out.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    out.push_back(perceive_observation(static_cast<int>(i), observations[i],
                                       scene_map, cfg, ao_ids));
  }
  return out;
}

std::vector<AgentPerception> perceive(
    const sim::Pose& own_frame, const sim::Scan& own_scan,
    const std::vector<sim::Scan>& neighbor_scans, const Scene& scene_map,
    const PerceptionConfig& cfg, const std::set<int>& ao_ids) {
  std::vector<Observation> observations;
  observations.push_back(sim::to_observation(own_scan, own_frame));
  for (const sim::Scan& s : neighbor_scans) {
    observations.push_back(sim::to_observation(s, own_frame));
  }
  return perceive_observations(observations, scene_map, cfg, ao_ids);
}

}  // namespace coopguard::percep
