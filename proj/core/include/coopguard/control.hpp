#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "coopguard/fdii.hpp"
#include "coopguard/geometry.hpp"

namespace coopguard::control {

using fdii::UnsafeRegion;
using geom::Point2;

class ControlError : public std::runtime_error {
 public:
  explicit ControlError(const std::string& what) : std::runtime_error(what) {}
};
class Infeasible : public ControlError {
 public:
  explicit Infeasible(const std::string& what) : ControlError(what) {}
};
class StartInsideRegion : public ControlError {
 public:
  explicit StartInsideRegion(const std::string& what) : ControlError(what) {}
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Point2 position() const { return {x, y}; }
};

struct ControlInput {
  double dvx = 0.0;
  double dvy = 0.0;
};

struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
};

struct MpcConfig {
  int horizon = 20;
  double q_weight = 1.0;  // state tracking (identity scaled)
  double r_weight = 1.0;  // input effort
  double f_weight = 1.0;  // terminal
  double gamma = 0.2;     // CBF decay in (0, 1]
  double dt = 0.03;
  double u_max = 0.5;
  int max_iterations = 500;   // dual ascent cap per QP
  double tolerance = 1e-8;    // dual ascent stop
  int sqp_iterations = 5;     // active-face re-selection passes
  // The published position/input coupling is 0.0045; dt^2/2 would be the
  // consistent zero-order-hold value. Default keeps the published number.
  bool consistent_discretization = false;
};

/// One step of the feedback-linearized double integrator, s' = A s + B u.
VehicleState linear_step(const VehicleState& s, const ControlInput& u,
                         const MpcConfig& cfg = MpcConfig{});

/// Euler-discretized kinematic bicycle; throws ControlError past the
/// steering limit (35 degrees by default).
BicycleState bicycle_step(const BicycleState& s, double steer, double accel,
                          double dt, double wheelbase,
                          double steer_max = 0.6108652381980153);

/// Velocity-vector follower used to check the linear plan is trackable:
/// proportional heading/speed loops feeding bicycle_step.
BicycleState bicycle_track_step(const BicycleState& s, Point2 velocity_command,
                                double dt, double wheelbase);

/// Receding-horizon plan from s0 toward goal. Each QP uses the per-step
/// active face of every region polygon; an outer loop re-selects faces on
/// the refreshed predicted trajectory.
std::vector<ControlInput> solve_mpc(const VehicleState& s0, Point2 goal,
                                    const UnsafeRegion& region,
                                    const MpcConfig& cfg);

struct ClosedLoopResult {
  std::vector<VehicleState> states;  // length steps+1, starts at start
  std::vector<ControlInput> inputs;  // applied first moves
  std::vector<double> h_min;         // min over polygons of h-bar, per state
  bool reached = false;
};

/// Applies the first input of each solve until within 0.5 m of goal or the
/// step budget runs out.
ClosedLoopResult run_closed_loop(const VehicleState& start, Point2 goal,
                                 const UnsafeRegion& region,
                                 const MpcConfig& cfg, int max_steps);

}  // namespace coopguard::control
