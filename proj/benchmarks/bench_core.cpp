#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "coopguard/control.hpp"
#include "coopguard/fdii.hpp"
#include "coopguard/geometry.hpp"
#include "coopguard/perception.hpp"
#include "coopguard/scene_lidar.hpp"

using namespace coopguard;

namespace {

std::vector<geom::Point2> disk_points(std::size_t n) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<geom::Point2> pts;
  while (pts.size() < n) {
    const geom::Point2 p{uni(rng), uni(rng)};
    if (p.x * p.x + p.y * p.y <= 1.0) pts.push_back(p);
  }
  return pts;
}

void BM_ConvexHull(benchmark::State& state) {
  const auto pts = disk_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::convex_hull(pts));
  }
}
BENCHMARK(BM_ConvexHull)->Arg(100)->Arg(1000)->Arg(10000);

void BM_IntersectConvex(benchmark::State& state) {
  const auto a = geom::regular_polygon({0.0, 0.0}, 2.0, 64);
  const auto b = geom::regular_polygon({1.0, 0.5}, 2.0, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::intersect_convex(a, b));
  }
}
BENCHMARK(BM_IntersectConvex);

void BM_CastScan(benchmark::State& state) {
  sim::Scene scene;
  scene.obstacles.push_back(
      sim::Obstacle::cylinder(0, {-42.34, 137.05}, 0.3, 1.8));
  scene.obstacles.push_back(sim::Obstacle::box(1, {-48.0, 132.0}, 0.6, 0.6, 1.2));
  const sim::Pose pose{{-54.34, 137.05}, 0.0};
  const sim::LidarConfig cfg = state.range(0) == 0
                                   ? sim::LidarConfig::sweep8()
                                   : sim::LidarConfig::standard16();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::cast_scan(scene, pose, cfg, ++seed));
  }
}
BENCHMARK(BM_CastScan)->Arg(0)->Arg(1);

void BM_PerceiveObservation(benchmark::State& state) {
  sim::Scene scene;
  scene.obstacles.push_back(
      sim::Obstacle::cylinder(0, {-42.34, 137.05}, 0.3, 1.8));
  const sim::Pose pose{{-54.34, 137.05}, 0.0};
  const auto obs = sim::to_observation(
      sim::cast_scan(scene, pose, sim::LidarConfig::standard16(), 1), pose);
  for (auto _ : state) {
    benchmark::DoNotOptimize(percep::perceive_observation(
        0, obs, scene, percep::PerceptionConfig{}, {}));
  }
}
BENCHMARK(BM_PerceiveObservation);

void BM_SolveMpc(benchmark::State& state) {
  fdii::UnsafeRegion region;
  const auto poly = geom::regular_polygon({5.0, 0.5}, 1.5, 14);
  region.polygons.push_back(poly);
  region.constraints.push_back(poly.half_planes());
  const control::MpcConfig cfg;
  const control::VehicleState s0{0.0, 0.0, 1.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(control::solve_mpc(s0, {10.0, 0.0}, region, cfg));
  }
}
BENCHMARK(BM_SolveMpc);

}  // namespace

BENCHMARK_MAIN();
