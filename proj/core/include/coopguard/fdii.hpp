#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "coopguard/geometry.hpp"
#include "coopguard/perception.hpp"

namespace coopguard::fdii {

using geom::ConvexPolygon;
using geom::HalfPlane;
using geom::Point2;
using percep::AgentPerception;

class FdiiError : public std::runtime_error {
  using std::runtime_error::runtime_error;

 public:
  explicit FdiiError(const std::string& what) : std::runtime_error(what) {}
};
class NoOverlap : public FdiiError {
 public:
  explicit NoOverlap(const std::string& what) : FdiiError(what) {}
};
class NoNeighborCoverage : public FdiiError {
 public:
  explicit NoNeighborCoverage(const std::string& what) : FdiiError(what) {}
};

enum class ObstacleClass { kTrueObstacle, kNeo };

struct ObstacleFinding {
  ObstacleClass klass = ObstacleClass::kTrueObstacle;
  bool verified = true;  // false when no neighbor covers the obstacle
};

enum class ResidualKind { kNoResidual, kPraFullOrPartialView, kPra3OrAo };

struct ResidualVerdict {
  ResidualKind kind = ResidualKind::kNoResidual;
  int category = 0;  // 1 or 2 when kind == kPraFullOrPartialView
};

struct Verdict {
  std::map<int, ObstacleFinding> per_obstacle;
  ResidualVerdict residual;
  bool attacked = false;
};

struct UnsafeRegion {
  std::vector<ConvexPolygon> polygons;
  std::vector<std::vector<HalfPlane>> constraints;  // per polygon

  bool empty() const { return polygons.empty(); }
  /// h̄ for one polygon: max over its half-planes of a·s + b. Non-negative
  /// exactly outside or on the polygon.
  double h_bar(std::size_t poly_index, Point2 s) const;
  /// Minimum of h̄ across polygons; +inf for an empty region.
  double min_h_bar(Point2 s) const;
};

enum class MatchResult { kMatch, kMismatch };

enum class ResidualMatchKind { kEmpty, kSubsetOfB, kEscapesB };

struct ResidualMatch {
  ResidualMatchKind kind = ResidualMatchKind::kEmpty;
  int category = 0;  // 1: no intersection with B's areas, 2: partial
};

/// Set test behind the NEO branch: Mismatch iff some projection of A's
/// obstacle k (restricted to the joint coverage) lies outside every
/// occupied area of B, with margin max(zeta_h_A, zeta_h_B).
MatchResult scan_match_detected(int k, const AgentPerception& perception_a,
                                const AgentPerception& perception_b);

/// Residual set test: where do A's unboxed projections fall relative to
/// B's occupied areas (detected plus residual)?
ResidualMatch scan_match_residual(const AgentPerception& perception_a,
                                  const AgentPerception& perception_b);

/// Full detection/isolation pass for agent A against its neighbors.
Verdict run_decision_tree(const AgentPerception& perception_a,
                          const std::vector<AgentPerception>& neighbors);

/// Conservative unsafe region: pairwise intersections of A's margin-inflated
/// occupied areas (NEO-classified ones dropped) with each neighbor's.
UnsafeRegion unsafe_region(const std::vector<AgentPerception>& perceptions,
                           const Verdict& verdict);

/// Reads the outward half-planes back out of a region polygon list.
std::vector<std::vector<HalfPlane>> export_constraints(
    const UnsafeRegion& region);

}  // namespace coopguard::fdii
