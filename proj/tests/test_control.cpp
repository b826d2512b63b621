#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "coopguard/control.hpp"
#include "coopguard/fdii.hpp"
#include "coopguard/geometry.hpp"
#include "runner.hpp"

using namespace coopguard;
using control::BicycleState;
using control::ControlInput;
using control::MpcConfig;
using control::VehicleState;
using fdii::UnsafeRegion;
using geom::Point2;

namespace {

UnsafeRegion drive_region() {
  const auto scenario = run::load_scenario(
      std::string(COOPGUARD_SCENARIO_DIR) + "/drive.json");
  REQUIRE(scenario.region_override.has_value());
  return *scenario.region_override;
}

}  // namespace

TEST_CASE("linear step reproduces the printed matrices exactly") {
  const MpcConfig cfg;
  const VehicleState a = control::linear_step({0, 0, 1, 0}, {0, 0}, cfg);
  CHECK(a.x == 0.03);
  CHECK(a.y == 0.0);
  CHECK(a.vx == 1.0);
  CHECK(a.vy == 0.0);

  const VehicleState b = control::linear_step({0, 0, 0, 0}, {1, 0}, cfg);
  CHECK(b.x == 0.0045);
  CHECK(b.y == 0.0);
  CHECK(b.vx == 1.0);
  CHECK(b.vy == 0.0);

  const VehicleState zero = control::linear_step({0, 0, 0, 0}, {0, 0}, cfg);
  CHECK(zero.x == 0.0);
  CHECK(zero.y == 0.0);
  CHECK(zero.vx == 0.0);
  CHECK(zero.vy == 0.0);

  MpcConfig consistent = cfg;
  consistent.consistent_discretization = true;
  const VehicleState c = control::linear_step({0, 0, 0, 0}, {1, 0}, consistent);
  CHECK(c.x == doctest::Approx(0.03 * 0.03 / 2.0).epsilon(1e-15));
}

TEST_CASE("bicycle plant basics") {
  const BicycleState straight =
      control::bicycle_step({0, 0, 0, 10.0}, 0.0, 0.0, 0.03, 4.0);
  CHECK(straight.x == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(straight.y == doctest::Approx(0.0).epsilon(1e-12));

  const BicycleState parked =
      control::bicycle_step({1, 2, 0.5, 0.0}, 0.2, 0.0, 0.03, 4.0);
  CHECK(parked.x == 1.0);
  CHECK(parked.y == 2.0);

  CHECK_THROWS_AS(control::bicycle_step({0, 0, 0, 5.0}, 0.8, 0.0, 0.03, 4.0),
                  control::ControlError);
}

TEST_CASE("constant steering closes a circle of radius l over tan delta") {
  const double l = 4.0;
  const double delta = 0.3;
  const double v = 8.0;
  const double dt = 0.001;
  const double radius = l / std::tan(delta);
  const double period = 2.0 * M_PI * radius / v;
  BicycleState s{0, 0, 0, v};
  int steps = 0;
  for (double t = 0.0; t < period; t += dt, ++steps) {
    s = control::bicycle_step(s, delta, 0.0, dt, l);
  }
  const double circumference = 2.0 * M_PI * radius;
  const double closure = std::hypot(s.x, s.y);
  CHECK(closure < 0.01 * circumference);
}

TEST_CASE("velocity follower converges onto the commanded vector") {
  BicycleState s{0, 0, 0.0, 0.0};
  const Point2 command{1.5, 1.5};  // 45 degrees, about 2.1 m/s
  for (int i = 0; i < 3000; ++i) {
    s = control::bicycle_track_step(s, command, 0.01, 4.0);
  }
  CHECK(std::abs(s.heading - M_PI / 4.0) < 0.05);
  CHECK(std::abs(s.v - geom::norm(command)) < 0.1);
}

TEST_CASE("resting at the goal commands nothing") {
  MpcConfig cfg;
  const auto inputs =
      control::solve_mpc({3.0, -2.0, 0.0, 0.0}, {3.0, -2.0}, UnsafeRegion{}, cfg);
  REQUIRE(static_cast<int>(inputs.size()) == cfg.horizon);
  for (const ControlInput& u : inputs) {
    CHECK(std::abs(u.dvx) < 1e-8);
    CHECK(std::abs(u.dvy) < 1e-8);
  }
}

TEST_CASE("unconstrained solve satisfies the stationarity oracle") {
  MpcConfig cfg;
  cfg.u_max = 1e6;  // keep the box inactive so the KKT system is pure
  const VehicleState s0{0.02, -0.015, 0.0, 0.0};
  const Point2 goal{0.0, 0.0};
  const auto inputs = control::solve_mpc(s0, goal, UnsafeRegion{}, cfg);

  // Independent reconstruction of the condensed QP: stack s_1..s_N, cost
  // sum ||s_k - g||_Q + ||u_k||_R with F on the terminal state.
  const int n = 4, m = 2, N = cfg.horizon;
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  A(0, 2) = cfg.dt;
  A(1, 3) = cfg.dt;
  Eigen::Matrix<double, 4, 2> B;
  B << 0.0045, 0, 0, 0.0045, 1, 0, 0, 1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n * N, m * N);
  Eigen::VectorXd c(n * N);
  Eigen::Vector4d x0(s0.x, s0.y, s0.vx, s0.vy);
  Eigen::Matrix4d Ak = Eigen::Matrix4d::Identity();
  for (int k = 0; k < N; ++k) {
    Ak = A * Ak;
    c.segment<4>(n * k) = Ak * x0;
    for (int j = 0; j <= k; ++j) {
      Eigen::Matrix4d Apow = Eigen::Matrix4d::Identity();
      for (int e = 0; e < k - j; ++e) Apow = A * Apow;
      S.block<4, 2>(n * k, m * j) = Apow * B;
    }
  }
  Eigen::VectorXd gbar(n * N);
  for (int k = 0; k < N; ++k) {
    gbar.segment<4>(n * k) = Eigen::Vector4d(goal.x, goal.y, 0.0, 0.0);
  }
  Eigen::MatrixXd Qbar =
      Eigen::MatrixXd::Identity(n * N, n * N) * cfg.q_weight;
  Qbar.bottomRightCorner(n, n) = Eigen::Matrix4d::Identity() * cfg.f_weight;
  const Eigen::MatrixXd H =
      2.0 * (S.transpose() * Qbar * S +
             cfg.r_weight * Eigen::MatrixXd::Identity(m * N, m * N));
  const Eigen::VectorXd f = 2.0 * S.transpose() * (Qbar * (c - gbar));

  Eigen::VectorXd u(m * N);
  for (int k = 0; k < N; ++k) {
    u(2 * k) = inputs[k].dvx;
    u(2 * k + 1) = inputs[k].dvy;
  }
  const double kkt = (H * u + f).lpNorm<Eigen::Infinity>();
  CHECK(kkt <= 1e-8);
}

TEST_CASE("position error decreases monotonically after the transient") {
  MpcConfig cfg;
  const Point2 goal{6.0, -4.0};
  const auto result =
      control::run_closed_loop({0, 0, 0, 0}, goal, UnsafeRegion{}, cfg, 2000);
  CHECK(result.reached);
  const int transient = 40;
  double prev = 1e300;
  for (std::size_t k = transient; k < result.states.size(); ++k) {
    const double err = geom::distance(result.states[k].position(), goal);
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
}

TEST_CASE("input bounds hold along the closed loop") {
  MpcConfig cfg;
  const auto result = control::run_closed_loop({0, 0, 0, 0}, {20.0, 0.0},
                                               UnsafeRegion{}, cfg, 2000);
  for (const ControlInput& u : result.inputs) {
    CHECK(std::abs(u.dvx) <= cfg.u_max + 1e-9);
    CHECK(std::abs(u.dvy) <= cfg.u_max + 1e-9);
  }
}

TEST_CASE("drive region constraints match the published coefficients") {
  const UnsafeRegion region = drive_region();
  REQUIRE(region.polygons.size() == 1);
  const auto& planes = region.constraints[0];
  REQUIRE(planes.size() == 14);

  // first face: a proportional to (-0.35, 0.94), b scaling to -132.74
  const geom::HalfPlane& h1 = planes[0];
  const double n1 = std::hypot(-0.35, 0.94);
  const double cos1 =
      (h1.normal.x * (-0.35) + h1.normal.y * 0.94) / n1;
  CHECK(std::abs(cos1) >= 0.999);
  CHECK(h1.offset * n1 == doctest::Approx(-132.74).epsilon(1e-6));

  // last face: direction of (0.12, -0.99) up to the sign convention
  const geom::HalfPlane& h14 = planes[13];
  const double n14 = std::hypot(0.12, -0.99);
  const double cos14 =
      (h14.normal.x * 0.12 + h14.normal.y * (-0.99)) / n14;
  CHECK(std::abs(cos14) >= 0.999);
}

TEST_CASE("case-study drive reaches the goal without entering the region") {
  const auto scenario = run::load_scenario(
      std::string(COOPGUARD_SCENARIO_DIR) + "/drive.json");
  const UnsafeRegion region = *scenario.region_override;
  REQUIRE(scenario.task.has_value());
  const auto& task = *scenario.task;

  const auto result = control::run_closed_loop(task.start, task.goal,
                                               region, scenario.mpc,
                                               task.max_steps);
  CHECK(result.reached);
  CHECK(geom::distance(result.states.back().position(), task.goal) <= 0.5);
  REQUIRE(result.h_min.size() == result.states.size());
  for (const double h : result.h_min) {
    CHECK(h >= 0.0);
  }
  // DT-CBF decrement along the applied trajectory
  const double gamma = scenario.mpc.gamma;
  for (std::size_t k = 0; k + 1 < result.h_min.size(); ++k) {
    CHECK(result.h_min[k + 1] >= (1.0 - gamma) * result.h_min[k] - 1e-6);
  }
}

TEST_CASE("degenerate tasks fail loudly instead of silently violating") {
  const UnsafeRegion region = drive_region();
  const Point2 inside = region.polygons[0].centroid();

  // goal buried inside the region
  CHECK_THROWS_AS(control::run_closed_loop({-14.34, 137.05, 0, 0}, inside,
                                           region, MpcConfig{}, 100),
                  control::ControlError);
  // start buried inside the region
  CHECK_THROWS_AS(
      control::run_closed_loop({inside.x, inside.y, 0, 0}, {-5.0, 135.25},
                               region, MpcConfig{}, 100),
      control::ControlError);

  // goal == start terminates immediately
  const auto idle = control::run_closed_loop({1.0, 1.0, 0, 0}, {1.0, 1.0},
                                             UnsafeRegion{}, MpcConfig{}, 100);
  CHECK(idle.reached);
  CHECK(idle.inputs.empty());
}
