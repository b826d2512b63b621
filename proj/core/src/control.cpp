#include "coopguard/control.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace coopguard::control {

namespace {

Eigen::Matrix4d model_a(const MpcConfig& cfg) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  a(0, 2) = cfg.dt;
  a(1, 3) = cfg.dt;
  return a;
}

Eigen::Matrix<double, 4, 2> model_b(const MpcConfig& cfg) {
  const double pos =
      cfg.consistent_discretization ? 0.5 * cfg.dt * cfg.dt : 0.0045;
  Eigen::Matrix<double, 4, 2> b = Eigen::Matrix<double, 4, 2>::Zero();
  b(0, 0) = pos;
  b(1, 1) = pos;
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  return b;
}

Eigen::Vector4d to_vec(const VehicleState& s) {
  return {s.x, s.y, s.vx, s.vy};
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

// Dual active-set solver for min 0.5 z'Hz + f'z s.t. Gz <= w with H
// positive definite. Each iteration adds the most violated constraint or
// drops one with a negative multiplier; the equality-constrained step is a
// Schur solve against the cached H factorization. `violation` reports
// max(Gz - w) so the caller can decide feasibility.
Eigen::VectorXd active_set_qp(const Eigen::MatrixXd& h_mat,
                              const Eigen::VectorXd& f_vec,
                              const Eigen::MatrixXd& g_mat,
                              const Eigen::VectorXd& w_vec, int max_iterations,
                              double tolerance, double* violation) {
  const Eigen::LLT<Eigen::MatrixXd> chol(h_mat);
  const Eigen::VectorXd z_free = -chol.solve(f_vec);
  Eigen::VectorXd z = z_free;
  *violation = (g_mat * z - w_vec).maxCoeff();
  if (*violation <= tolerance) return z;

  const Eigen::MatrixXd h_inv_gt = chol.solve(g_mat.transpose());
  std::vector<Eigen::Index> active;
  for (int it = 0; it < max_iterations; ++it) {
    if (!active.empty()) {
      const Eigen::Index na = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd schur(na, na);
      Eigen::VectorXd rhs(na);
      for (Eigen::Index r = 0; r < na; ++r) {
        rhs(r) = g_mat.row(active[r]).dot(z_free) - w_vec(active[r]);
        for (Eigen::Index c = 0; c < na; ++c) {
          schur(r, c) = g_mat.row(active[r]) * h_inv_gt.col(active[c]);
        }
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);
      if (!lu.isInvertible()) {
        active.pop_back();  // just-added row was dependent on the rest
        continue;
      }
      const Eigen::VectorXd lambda = lu.solve(rhs);
      Eigen::Index most_negative = -1;
      for (Eigen::Index r = 0; r < na; ++r) {
        if (lambda(r) < -tolerance &&
            (most_negative < 0 || lambda(r) < lambda(most_negative))) {
          most_negative = r;
        }
      }
      if (most_negative >= 0) {
        active.erase(active.begin() + most_negative);
        continue;
      }
      z = z_free;
      for (Eigen::Index r = 0; r < na; ++r) {
        z -= h_inv_gt.col(active[r]) * lambda(r);
      }
    }
    const Eigen::VectorXd slack = g_mat * z - w_vec;
    Eigen::Index worst = 0;
    *violation = slack.maxCoeff(&worst);
    if (*violation <= tolerance) return z;
    if (std::find(active.begin(), active.end(), worst) != active.end()) {
      break;  // numerically stuck; report the residual violation
    }
    active.push_back(worst);
  }
  *violation = (g_mat * z - w_vec).maxCoeff();
  return z;
}

}  // namespace

VehicleState linear_step(const VehicleState& s, const ControlInput& u,
                         const MpcConfig& cfg) {
  const Eigen::Vector4d next =
      model_a(cfg) * to_vec(s) + model_b(cfg) * Eigen::Vector2d{u.dvx, u.dvy};
  return {next(0), next(1), next(2), next(3)};
}

BicycleState bicycle_step(const BicycleState& s, double steer, double accel,
                          double dt, double wheelbase, double steer_max) {
  if (std::abs(steer) > steer_max + 1e-12) {
    throw ControlError("bicycle_step: steering limit exceeded");
  }
  BicycleState next;
  next.x = s.x + s.v * std::cos(s.heading) * dt;
  next.y = s.y + s.v * std::sin(s.heading) * dt;
  next.heading = s.heading + s.v / wheelbase * std::tan(steer) * dt;
  next.v = s.v + accel * dt;
  return next;
}

BicycleState bicycle_track_step(const BicycleState& s, Point2 velocity_command,
                                double dt, double wheelbase) {
  constexpr double kSteerMax = 0.6108652381980153;
  constexpr double kHeadingGain = 4.0;
  constexpr double kSpeedGain = 2.0;
  const double speed_cmd = std::hypot(velocity_command.x, velocity_command.y);
  double steer = 0.0;
  if (speed_cmd > 1e-6 && std::abs(s.v) > 1e-6) {
    const double heading_cmd =
        std::atan2(velocity_command.y, velocity_command.x);
    steer = std::clamp(kHeadingGain * wrap_angle(heading_cmd - s.heading),
                       -kSteerMax, kSteerMax);
  }
  const double accel = kSpeedGain * (speed_cmd - s.v);
  return bicycle_step(s, steer, accel, dt, wheelbase, kSteerMax);
}

std::vector<ControlInput> solve_mpc(const VehicleState& s0, Point2 goal,
                                    const UnsafeRegion& region,
                                    const MpcConfig& cfg) {
  const int n_steps = cfg.horizon;
  if (n_steps < 1) throw ControlError("solve_mpc: horizon must be >= 1");
  for (std::size_t i = 0; i < region.polygons.size(); ++i) {
    if (region.h_bar(i, s0.position()) < 0.0) {
      throw StartInsideRegion("solve_mpc: start inside region polygon " +
                              std::to_string(i));
    }
  }

  const Eigen::Matrix4d a_mat = model_a(cfg);
  const Eigen::Matrix<double, 4, 2> b_mat = model_b(cfg);
  const Eigen::Vector4d x0 = to_vec(s0);
  const Eigen::Vector4d x_goal{goal.x, goal.y, 0.0, 0.0};
  const int nz = 2 * n_steps;

  // Prediction: stacked states x_1..x_N = S z + c (positions/velocities are
  // affine in the input sequence z).
  Eigen::MatrixXd s_mat = Eigen::MatrixXd::Zero(4 * n_steps, nz);
  Eigen::VectorXd c_vec(4 * n_steps);
  {
    Eigen::Vector4d x_free = x0;
    for (int k = 0; k < n_steps; ++k) {
      x_free = a_mat * x_free;
      c_vec.segment<4>(4 * k) = x_free;
      Eigen::Matrix4d a_run = Eigen::Matrix4d::Identity();
      for (int i = k; i >= 0; --i) {
        s_mat.block<4, 2>(4 * k, 2 * i) = a_run * b_mat;
        a_run = a_run * a_mat;
      }
    }
  }

  // Cost weights: Q on x_1..x_{N-1}, F on x_N, R on every input.
  Eigen::VectorXd q_diag(4 * n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double w = (k == n_steps - 1) ? cfg.f_weight : cfg.q_weight;
    q_diag.segment<4>(4 * k).setConstant(w);
  }
  Eigen::VectorXd goal_stack(4 * n_steps);
  for (int k = 0; k < n_steps; ++k) goal_stack.segment<4>(4 * k) = x_goal;

  const Eigen::MatrixXd h_mat =
      2.0 * (s_mat.transpose() * q_diag.asDiagonal() * s_mat +
             cfg.r_weight * Eigen::MatrixXd::Identity(nz, nz));
  const Eigen::VectorXd f_vec =
      2.0 * s_mat.transpose() * (q_diag.asDiagonal() * (c_vec - goal_stack));

  // Box constraints |u_i| <= u_max.
  const int n_box = 2 * nz;
  const int n_cbf = static_cast<int>(region.polygons.size()) * n_steps;
  Eigen::MatrixXd g_mat = Eigen::MatrixXd::Zero(n_box + n_cbf, nz);
  Eigen::VectorXd w_vec(n_box + n_cbf);
  for (int i = 0; i < nz; ++i) {
    g_mat(2 * i, i) = 1.0;
    g_mat(2 * i + 1, i) = -1.0;
    w_vec(2 * i) = cfg.u_max;
    w_vec(2 * i + 1) = cfg.u_max;
  }

  // Predicted trajectory used for active-face selection; refreshed by the
  // outer loop after each QP solve.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
  std::vector<std::size_t> faces(region.polygons.size() * n_steps, 0);
  double violation = 0.0;
  for (int pass = 0; pass < cfg.sqp_iterations; ++pass) {
    const Eigen::VectorXd x_stack = s_mat * z + c_vec;
    bool faces_changed = pass == 0;
    int row = n_box;
    for (std::size_t p = 0; p < region.polygons.size(); ++p) {
      for (int k = 0; k < n_steps; ++k, ++row) {
        // h at the predecessor state of step k+1 (x0 for k = 0).
        const Point2 prev =
            k == 0 ? s0.position()
                   : Point2{x_stack(4 * (k - 1)), x_stack(4 * (k - 1) + 1)};
        const auto& planes = region.constraints[p];
        std::size_t best = 0;
        for (std::size_t l = 1; l < planes.size(); ++l) {
          if (planes[l].eval(prev) > planes[best].eval(prev)) best = l;
        }
        if (faces[p * n_steps + k] != best) {
          faces[p * n_steps + k] = best;
          faces_changed = true;
        }
        const geom::HalfPlane& face = planes[best];
        // Require a.p_{k+1} + b >= (1-gamma)(a.p_k + b); both sides are
        // affine in z. Row form: lhs(z) <= w.
        Eigen::RowVectorXd lhs = -face.normal.x * s_mat.row(4 * k) -
                                 face.normal.y * s_mat.row(4 * k + 1);
        double rhs = face.offset + face.normal.x * c_vec(4 * k) +
                     face.normal.y * c_vec(4 * k + 1);
        if (k == 0) {
          rhs -= (1.0 - cfg.gamma) *
                 (face.normal.x * s0.x + face.normal.y * s0.y + face.offset);
        } else {
          lhs += (1.0 - cfg.gamma) * (face.normal.x * s_mat.row(4 * (k - 1)) +
                                      face.normal.y * s_mat.row(4 * (k - 1) + 1));
          rhs -= (1.0 - cfg.gamma) *
                 (face.normal.x * c_vec(4 * (k - 1)) +
                  face.normal.y * c_vec(4 * (k - 1) + 1) + face.offset);
        }
        g_mat.row(row) = lhs;
        w_vec(row) = rhs;
      }
    }
    if (!faces_changed) break;
    z = active_set_qp(h_mat, f_vec, g_mat, w_vec, cfg.max_iterations,
                    cfg.tolerance, &violation);
  }
  if (violation > 1e-6) {
    // Identify the worst-violated polygon for the report.
    const Eigen::VectorXd slack = g_mat * z - w_vec;
    Eigen::Index worst = 0;
    slack.maxCoeff(&worst);
    const std::size_t poly =
        worst < n_box ? 0
                      : static_cast<std::size_t>((worst - n_box) / n_steps);
    throw Infeasible("solve_mpc: infeasible, polygon " + std::to_string(poly));
  }

  std::vector<ControlInput> plan(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    plan[static_cast<std::size_t>(k)] = {z(2 * k), z(2 * k + 1)};
  }
  return plan;
}

ClosedLoopResult run_closed_loop(const VehicleState& start, Point2 goal,
                                 const UnsafeRegion& region,
                                 const MpcConfig& cfg, int max_steps) {
  for (std::size_t i = 0; i < region.polygons.size(); ++i) {
    if (region.h_bar(i, goal) < 0.0) {
      throw Infeasible("run_closed_loop: goal inside region polygon " +
                       std::to_string(i));
    }
  }
  ClosedLoopResult result;
  VehicleState s = start;
  result.states.push_back(s);
  result.h_min.push_back(region.min_h_bar(s.position()));
  if (geom::distance(s.position(), goal) <= 0.5) {
    result.reached = true;
    return result;
  }
  for (int step = 0; step < max_steps; ++step) {
    const std::vector<ControlInput> plan = solve_mpc(s, goal, region, cfg);
    const ControlInput u = plan.front();
    s = linear_step(s, u, cfg);
    result.inputs.push_back(u);
    result.states.push_back(s);
    result.h_min.push_back(region.min_h_bar(s.position()));
    if (geom::distance(s.position(), goal) <= 0.5) {
      result.reached = true;
      break;
    }
  }
  return result;
}

}  // namespace coopguard::control
