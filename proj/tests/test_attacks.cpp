#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "coopguard/attacks.hpp"
#include "coopguard/perception.hpp"
#include "coopguard/scene_lidar.hpp"

using namespace coopguard;
using atk::AttackError;
using atk::NoiseCylinder;
using sim::LidarConfig;
using sim::Obstacle;
using sim::Observation;
using sim::Pose;
using sim::Scene;

namespace {

const Pose kAgentA{{-54.34, 137.05}, 0.0};
const Pose kAgentB{{-34.34, 137.05}, M_PI};

Scene pedestrian_scene() {
  Scene scene;
  scene.obstacles.push_back(Obstacle::cylinder(0, {-42.34, 137.05}, 0.3, 1.8));
  return scene;
}

Observation observe(const Scene& scene, const Pose& pose,
                    const LidarConfig& cfg, std::uint64_t seed) {
  return sim::to_observation(sim::cast_scan(scene, pose, cfg, seed),
                            {{0.0, 0.0}, 0.0});
}

bool observations_equal(const Observation& a, const Observation& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].x != b.points[i].x || a.points[i].y != b.points[i].y ||
        a.points[i].z != b.points[i].z || a.labels[i] != b.labels[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("NEO injects the arc a real cylinder would return") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(Scene{}, kAgentA, cfg, 11);
  const Obstacle fake =
      Obstacle::cylinder(100, {-46.34, 137.05}, 1.0, 1.7);  // 8 m ahead
  const auto tampered = atk::apply_neo(obs, fake, cfg, 11);
  REQUIRE(!tampered.injected_indices.empty());

  double nearest = 1e300;
  for (std::size_t idx : tampered.injected_indices) {
    const geom::Point3 p = tampered.observation.points[idx];
    // every injected point sits exactly on the fake's lateral surface or top
    const double lateral = std::hypot(p.x - fake.center.x, p.y - fake.center.y);
    const bool on_side = std::abs(lateral - fake.radius) < 1e-6;
    const bool on_top =
        std::abs(p.z - fake.height) < 1e-6 && lateral <= fake.radius + 1e-6;
    CHECK((on_side || on_top));
    nearest = std::min(
        nearest, std::hypot(p.x - kAgentA.position.x, p.y - kAgentA.position.y));
  }
  // front surface of a radius-1 cylinder 8 m ahead begins at 7 m
  CHECK(nearest == doctest::Approx(7.0).epsilon(0.01));
}

TEST_CASE("NEO injection matches a genuine scan of the fake alone") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(Scene{}, kAgentA, cfg, 21);
  const Obstacle fake = Obstacle::cylinder(100, {-46.34, 137.05}, 1.0, 1.7);
  const auto tampered = atk::apply_neo(obs, fake, cfg, 21);

  Scene fake_only;
  fake_only.obstacles.push_back(fake);
  LidarConfig clean = cfg;
  clean.noise_sigma = 0.0;
  const Observation real = observe(fake_only, kAgentA, clean, 21);
  std::vector<geom::Point3> real_pts;
  for (std::size_t i = 0; i < real.points.size(); ++i) {
    if (real.labels[i] == fake.id) real_pts.push_back(real.points[i]);
  }
  REQUIRE(real_pts.size() == tampered.injected_indices.size());
  for (std::size_t k = 0; k < real_pts.size(); ++k) {
    const geom::Point3 a = real_pts[k];
    const geom::Point3 b =
        tampered.observation.points[tampered.injected_indices[k]];
    CHECK(std::abs(a.x - b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
    CHECK(std::abs(a.z - b.z) < 1e-9);
  }
}

TEST_CASE("NEO drops true background returns along spoofed rays") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(Scene{}, kAgentA, cfg, 31);
  const Obstacle fake = Obstacle::cylinder(100, {-46.34, 137.05}, 1.0, 1.7);
  const auto replaced = atk::apply_neo(obs, fake, cfg, 31, false);
  const auto superposed = atk::apply_neo(obs, fake, cfg, 31, true);
  CHECK(replaced.observation.points.size() <
        superposed.observation.points.size());
  CHECK(superposed.observation.points.size() ==
        obs.points.size() + superposed.injected_indices.size());
}

TEST_CASE("NEO clusters into a box holding the fake's center") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(Scene{}, kAgentA, cfg, 41);
  const Obstacle fake = Obstacle::cylinder(100, {-46.34, 137.05}, 1.0, 1.7);
  const auto tampered = atk::apply_neo(obs, fake, cfg, 41);
  const auto perception = percep::perceive_observation(
      0, tampered.observation, Scene{}, percep::PerceptionConfig{}, {});
  REQUIRE(perception.detected.size() == 1);
  const auto& box = perception.detected[0].box;
  CHECK(box.min.x <= fake.center.x);
  CHECK(box.max.x >= fake.center.x - fake.radius);  // front surface only
  CHECK(box.min.y <= fake.center.y);
  CHECK(box.max.y >= fake.center.y);
}

TEST_CASE("NEO beyond max range is out of view") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(Scene{}, kAgentA, cfg, 51);
  const Obstacle far = Obstacle::cylinder(100, {60.0, 137.05}, 1.0, 1.7);
  CHECK_THROWS_AS(atk::apply_neo(obs, far, cfg, 51), AttackError);
}

TEST_CASE("PRA removes shadowed returns and scatters noise in the cylinder") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(pedestrian_scene(), kAgentA, cfg, 13);
  const NoiseCylinder cyl{{-46.34, 137.05}, 1.3, 1.7};  // 8 m ahead of A
  const auto tampered = atk::apply_pra(obs, cyl, 13);

  // the pedestrian sits behind the cylinder: none of its returns survive
  for (const std::int32_t label : tampered.observation.labels) {
    CHECK(label != 0);
  }
  REQUIRE(!tampered.injected_indices.empty());
  for (std::size_t idx : tampered.injected_indices) {
    const geom::Point3 p = tampered.observation.points[idx];
    CHECK(std::hypot(p.x - cyl.center.x, p.y - cyl.center.y) <=
          cyl.radius + 1e-9);
    CHECK(p.z >= -1e-9);
    CHECK(p.z <= cyl.height + 1e-9);
    CHECK(tampered.observation.labels[idx] ==
          static_cast<std::int32_t>(sim::PointLabel::kSpoofed));
  }
}

TEST_CASE("PRA with nothing hidden behind the cylinder is rejected") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(pedestrian_scene(), kAgentA, cfg, 14);
  // 4 m behind the pedestrian as seen from A
  const NoiseCylinder behind{{-38.34, 137.05}, 1.0, 1.7};
  CHECK_THROWS_AS(atk::apply_pra(obs, behind, 14), AttackError);
}

TEST_CASE("PRA is deterministic under the seed") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(pedestrian_scene(), kAgentA, cfg, 15);
  const NoiseCylinder cyl{{-46.34, 137.05}, 1.3, 1.7};
  const auto a = atk::apply_pra(obs, cyl, 77);
  const auto b = atk::apply_pra(obs, cyl, 77);
  const auto c = atk::apply_pra(obs, cyl, 78);
  CHECK(observations_equal(a.observation, b.observation));
  CHECK(!observations_equal(a.observation, c.observation));
}

TEST_CASE("attack application leaves the input observation untouched") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Observation obs = observe(pedestrian_scene(), kAgentA, cfg, 16);
  const Observation before = obs;
  (void)atk::apply_pra(obs, {{-46.34, 137.05}, 1.3, 1.7}, 1);
  (void)atk::apply_neo(obs, Obstacle::cylinder(9, {-48.0, 139.0}, 0.8, 1.5),
                       cfg, 1);
  CHECK(observations_equal(obs, before));
}

TEST_CASE("AO flags the target and round-trips cleanly") {
  const Scene base = pedestrian_scene();
  const Scene flagged = atk::apply_ao(base, 0);
  REQUIRE(flagged.obstacles.size() == 1);
  CHECK(flagged.obstacles[0].ao_flag);
  CHECK(!base.obstacles[0].ao_flag);
  CHECK_THROWS_AS(atk::apply_ao(base, 42), AttackError);

  const LidarConfig cfg = LidarConfig::standard16();
  // identical seeds: the flag changes detection, never the physics
  const Observation obs_base = observe(base, kAgentA, cfg, 5);
  const Observation obs_flag = observe(flagged, kAgentA, cfg, 5);
  CHECK(observations_equal(obs_base, obs_flag));

  const auto with_box = percep::perceive_observation(
      0, obs_base, base, percep::PerceptionConfig{}, {});
  const auto without_box = percep::perceive_observation(
      0, obs_flag, flagged, percep::PerceptionConfig{}, {0});
  CHECK(with_box.detected.size() == 1);
  CHECK(with_box.residual_points.empty());
  CHECK(without_box.detected.empty());
  CHECK(!without_box.residual_points.empty());
  // the AO object still claims space through the residual pathway
  CHECK(!without_box.residual_area.is_empty());
}

TEST_CASE("PRA ground-truth classifier on the canonical geometries") {
  const LidarConfig cfg = LidarConfig::standard16();
  const Scene scene = pedestrian_scene();
  const NoiseCylinder pra2{{-46.34, 137.05}, 1.3, 1.7};
  const NoiseCylinder pra3{{-46.34, 137.05}, 0.4, 1.7};
  CHECK(atk::classify_pra_ground_truth(pra2, scene, kAgentA, kAgentB, cfg) == 2);
  CHECK(atk::classify_pra_ground_truth(pra3, scene, kAgentA, kAgentB, cfg) == 3);
  // a collocated helper shares the victim's shadow exactly
  CHECK(atk::classify_pra_ground_truth(pra3, scene, kAgentA, kAgentA, cfg) == 3);
  // a helper far off to the side sees the whole cylinder region
  const Pose side{{-46.34, 150.0}, -M_PI / 2.0};
  CHECK(atk::classify_pra_ground_truth(pra3, scene, kAgentA, side, cfg) == 1);
}
