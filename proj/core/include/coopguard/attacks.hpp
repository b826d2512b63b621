#pragma once

#include <cstdint>
#include <vector>

#include "coopguard/scene_lidar.hpp"

namespace coopguard::atk {

using sim::LidarConfig;
using sim::Obstacle;
using sim::Observation;
using sim::Pose;
using sim::Scene;

class AttackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NoiseCylinder {
  geom::Point2 center;
  double radius = 1.0;
  double height = 1.7;
};

struct AttackSpec {
  enum class Kind { kNone, kNeo, kPra, kAo };

  Kind kind = Kind::kNone;
  int victim = 0;  // agent index; exactly one victim per scenario
  std::uint64_t seed = 0;

  Obstacle neo_fake;              // kNeo
  bool neo_superpose = false;     // keep true background returns along spoofed rays
  NoiseCylinder pra_cylinder;     // kPra
  int ao_target_id = -1;          // kAo
};

/// Ground-truth bookkeeping for tests; stripped before FDII sees anything.
struct TamperedObservation {
  Observation observation;
  std::vector<std::size_t> injected_indices;
  AttackSpec spec;
};

/// Injects the returns a real obstacle of this shape would produce from the
/// victim's pose. Original returns whose rays pass through the fake surface
/// are dropped unless superpose is requested.
TamperedObservation apply_neo(const Observation& obs, const Obstacle& fake,
                              const LidarConfig& cfg, std::uint64_t seed,
                              bool superpose = false);

/// Deletes every return whose ray crosses the noise cylinder volume and
/// replaces it with a seeded Gaussian scatter inside the cylinder.
TamperedObservation apply_pra(const Observation& obs,
                              const NoiseCylinder& cyl, std::uint64_t seed);

/// Flags the target obstacle as detector-invisible; returns the edited scene.
Scene apply_ao(const Scene& scene, int target_id);

/// How much of the noise-cylinder region the helper agent can see:
/// 1 = fully, 2 = partially, 3 = not at all. A point counts as seen only
/// when the helper has unobstructed line of sight with nonzero parallax
/// against the victim's sight line.
int classify_pra_ground_truth(const NoiseCylinder& cyl, const Scene& scene,
                              const Pose& victim_pose, const Pose& helper_pose,
                              const LidarConfig& cfg);

}  // namespace coopguard::atk
