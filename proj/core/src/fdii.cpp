#include "coopguard/fdii.hpp"

#include <algorithm>
#include <limits>

namespace coopguard::fdii {

using geom::Point3;
using percep::DetectedObstacle;

namespace {

double pair_margin(const AgentPerception& a, const AgentPerception& b) {
  return std::max(a.zeta_h, b.zeta_h);
}

// Probe clouds are compared by their vertical projections only. The
// occupied areas being probed already contain the oblique shadows; adding
// the probe's own shadow would flag benign scenes whenever the two sensors
// look at an obstacle from different bearings.
std::vector<Point2> vertical_projections(const std::vector<Point3>& points) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const Point3& p : points) out.push_back(geom::vertical_project(p));
  return out;
}

std::vector<const ConvexPolygon*> all_areas(const AgentPerception& agent) {
  std::vector<const ConvexPolygon*> areas;
  for (const DetectedObstacle& d : agent.detected) {
    if (!d.occupied.is_empty()) areas.push_back(&d.occupied);
  }
  if (!agent.residual_area.is_empty()) areas.push_back(&agent.residual_area);
  return areas;
}

bool inside_any(const std::vector<const ConvexPolygon*>& areas, Point2 p,
                double margin) {
  return std::any_of(areas.begin(), areas.end(), [&](const ConvexPolygon* a) {
    return geom::contains_with_margin(*a, p, margin);
  });
}

}  // namespace

double UnsafeRegion::h_bar(std::size_t poly_index, Point2 s) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const HalfPlane& h : constraints[poly_index]) {
    best = std::max(best, h.eval(s));
  }
  return best;
}

double UnsafeRegion::min_h_bar(Point2 s) const {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    worst = std::min(worst, h_bar(i, s));
  }
  return worst;
}

MatchResult scan_match_detected(int k, const AgentPerception& perception_a,
                                const AgentPerception& perception_b) {
  if (k < 0 || static_cast<std::size_t>(k) >= perception_a.detected.size()) {
    throw FdiiError("scan_match_detected: no such obstacle index");
  }
  const DetectedObstacle& obstacle = perception_a.detected[k];
  const ConvexPolygon joint =
      geom::intersect_convex(perception_a.scan_area, perception_b.scan_area);

  const std::vector<Point2> probes = vertical_projections(obstacle.points);
  std::vector<Point2> covered;
  for (const Point2& p : probes) {
    if (geom::contains_with_margin(joint, p, geom::kGeomEps)) {
      covered.push_back(p);
    }
  }
  if (covered.empty()) {
    throw NoOverlap("scan_match_detected: obstacle outside joint coverage");
  }

  const double margin = pair_margin(perception_a, perception_b);
  std::vector<const ConvexPolygon*> b_areas;
  for (const DetectedObstacle& d : perception_b.detected) {
    if (!d.occupied.is_empty()) b_areas.push_back(&d.occupied);
  }
  for (const Point2& p : covered) {
    if (!inside_any(b_areas, p, margin)) return MatchResult::kMismatch;
  }
  return MatchResult::kMatch;
}

ResidualMatch scan_match_residual(const AgentPerception& perception_a,
                                  const AgentPerception& perception_b) {
  if (perception_a.residual_points.empty()) {
    return {ResidualMatchKind::kEmpty, 0};
  }
  const double margin = pair_margin(perception_a, perception_b);
  const std::vector<const ConvexPolygon*> b_areas = all_areas(perception_b);
  std::size_t inside = 0;
  std::size_t outside = 0;
  for (const Point3& p : perception_a.residual_points) {
    if (inside_any(b_areas, geom::vertical_project(p), margin)) {
      ++inside;
    } else {
      ++outside;
    }
  }
  if (outside == 0) return {ResidualMatchKind::kSubsetOfB, 0};
  return {ResidualMatchKind::kEscapesB, inside == 0 ? 1 : 2};
}

Verdict run_decision_tree(const AgentPerception& perception_a,
                          const std::vector<AgentPerception>& neighbors) {
  bool covered = false;
  for (const AgentPerception& nb : neighbors) {
    if (!geom::intersect_convex(perception_a.scan_area, nb.scan_area)
             .is_empty()) {
      covered = true;
      break;
    }
  }
  if (!covered) {
    throw NoNeighborCoverage("run_decision_tree: no neighbor scan overlap");
  }

  Verdict verdict;
  for (std::size_t k = 0; k < perception_a.detected.size(); ++k) {
    ObstacleFinding finding;
    finding.verified = false;
    for (const AgentPerception& nb : neighbors) {
      try {
        const MatchResult r =
            scan_match_detected(static_cast<int>(k), perception_a, nb);
        finding.verified = true;
        if (r == MatchResult::kMismatch) {
          finding.klass = ObstacleClass::kNeo;
          break;
        }
      } catch (const NoOverlap&) {
        // This neighbor cannot vouch either way; try the next one.
      }
    }
    verdict.per_obstacle[static_cast<int>(k)] = finding;
  }

  if (!perception_a.residual_points.empty()) {
    std::size_t inside = 0;
    std::size_t outside = 0;
    for (const Point3& p : perception_a.residual_points) {
      const Point2 proj = geom::vertical_project(p);
      bool hit = false;
      for (const AgentPerception& nb : neighbors) {
        if (inside_any(all_areas(nb), proj, pair_margin(perception_a, nb))) {
          hit = true;
          break;
        }
      }
      hit ? ++inside : ++outside;
    }
    if (outside == 0) {
      verdict.residual.kind = ResidualKind::kPra3OrAo;
    } else {
      verdict.residual.kind = ResidualKind::kPraFullOrPartialView;
      verdict.residual.category = inside == 0 ? 1 : 2;
    }
  }

  const bool any_neo = std::any_of(
      verdict.per_obstacle.begin(), verdict.per_obstacle.end(),
      [](const auto& kv) { return kv.second.klass == ObstacleClass::kNeo; });
  verdict.attacked =
      any_neo || verdict.residual.kind != ResidualKind::kNoResidual;
  return verdict;
}

UnsafeRegion unsafe_region(const std::vector<AgentPerception>& perceptions,
                           const Verdict& verdict) {
  UnsafeRegion region;
  if (perceptions.size() < 2) return region;
  const AgentPerception& agent_a = perceptions.front();

  std::vector<const ConvexPolygon*> a_areas;
  for (std::size_t k = 0; k < agent_a.detected.size(); ++k) {
    const auto it = verdict.per_obstacle.find(static_cast<int>(k));
    if (it != verdict.per_obstacle.end() &&
        it->second.klass == ObstacleClass::kNeo) {
      continue;  // isolated fake: its area must not shrink the safe set
    }
    if (!agent_a.detected[k].occupied.is_empty()) {
      a_areas.push_back(&agent_a.detected[k].occupied);
    }
  }
  if (!agent_a.residual_area.is_empty()) {
    a_areas.push_back(&agent_a.residual_area);
  }

  for (std::size_t j = 1; j < perceptions.size(); ++j) {
    const AgentPerception& nb = perceptions[j];
    const double margin = pair_margin(agent_a, nb);
    for (const ConvexPolygon* a_poly : a_areas) {
      for (const ConvexPolygon* b_poly : all_areas(nb)) {
        const ConvexPolygon inter = geom::intersect_convex(
            geom::inflate(*a_poly, margin), geom::inflate(*b_poly, margin));
        if (inter.is_empty()) continue;
        region.constraints.push_back(inter.half_planes());
        region.polygons.push_back(inter);
      }
    }
  }
  return region;
}

std::vector<std::vector<HalfPlane>> export_constraints(
    const UnsafeRegion& region) {
  return region.constraints;
}

}  // namespace coopguard::fdii
