#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reftrack/core/bspline.hpp"

namespace reftrack {

using Vec4 = Eigen::Vector4d;

struct ControlCommand {
  Vec3 v = Vec3::Zero();
  double omega_z = 0.0;
};

using NmpcState = AgentState;

struct NmpcConfig {
  int n_p = 15;
  double delta_tc = 0.05;
  double delta_td = 0.05;
  double d_z = 0.8;
  double v_max = 0.6;
  double omega_max = 1.0;
  Vec4 q = Vec4(100, 100, 100, 1);  // x, y, z, yaw
  Vec4 r = Vec4(1, 1, 1, 0.1);      // v_x, v_y, v_z, omega_z
  Vec3 state_lo = Vec3::Constant(-1e6);
  Vec3 state_hi = Vec3::Constant(1e6);
  int max_obstacles = 10;
  int max_iter = 30;
  double kkt_tol = 1e-4;
  /// Infinity-norm bound on the input change per SQP iteration.
  double trust_radius = 0.5;
  /// Penalty on the per-step slack of obstacle and state-box rows.
  double slack_weight = 1e4;
  /// Reference speeds below this hold the previous heading.
  double heading_eps = 1e-3;

  void validate() const;
};

struct NmpcProblem {
  int n_p = 0;
  NmpcState x0;
  Vec3List reference;           // n_p + 1 positions
  std::vector<double> yaw_ref;  // n_p + 1, unwrapped
  Vec3List v_ref;               // n_p
  Vec3List obstacles;
  Vec4 q = Vec4::Zero();
  Vec4 r = Vec4::Zero();
  Vec3 state_lo = Vec3::Zero();
  Vec3 state_hi = Vec3::Zero();
  double v_max = 0.0;
  double omega_max = 0.0;
  double d_z = 0.0;
  double delta_tc = 0.0;

  void validate() const;
};

enum class NmpcStatus {
  Optimal,
  Relaxed,  // some obstacle or state-box row needed slack
  MaxIterations,
  QpFailure,
};

std::string to_string(NmpcStatus s);

struct NmpcSolution {
  std::vector<ControlCommand> inputs;
  std::vector<NmpcState> states;
  NmpcStatus status = NmpcStatus::MaxIterations;
  double kkt_residual = 0.0;
  double cost = 0.0;
  double max_slack = 0.0;
  int iterations = 0;
};

NmpcState dynamics_step(const NmpcState& x, const ControlCommand& u, double delta_tc);

/// Tracking problem for the window (padded with its last point when shorter
/// than n_p + 1). Keeps the max_obstacles obstacles nearest to x0.
NmpcProblem build_nmpc(const TrajectoryWindow& win, const NmpcState& x0, const Vec3List& obstacles,
                       const NmpcConfig& cfg);

/// Σ_{l=0}^{N} ‖x_l − c_l‖²_Q + Σ_{l<N} ‖u_l − v_ref_l‖²_R with yaw errors wrapped.
double nmpc_cost(const NmpcProblem& prob, const std::vector<ControlCommand>& inputs);

/// Largest g2 value D_z² − ‖p_l − o‖² over l >= 1 (negative when all clear).
double max_obstacle_violation(const NmpcProblem& prob, const std::vector<NmpcState>& states);

/// SQP on the condensed kinematic model with a trust region on the inputs.
/// Obstacle rows linearize g2 at the radial projection of the iterate onto the
/// zone boundary (the zone's tangent plane). Linearizations of a concave g2
/// over-estimate it, so a QP point with zero slack satisfies the true rows.
/// Obstacle and state-box rows share one ℓ1-penalized slack per step.
NmpcSolution solve_nmpc(const NmpcProblem& prob, const NmpcSolution* warm = nullptr,
                        const NmpcConfig& cfg = {});

struct NmpcLogRecord {
  double timestamp = 0.0;
  NmpcState x0;
  ControlCommand u;
  NmpcStatus status = NmpcStatus::Optimal;
  int iterations = 0;
  double solve_time = 0.0;
};

/// `timestamp,x,y,z,yaw,vx,vy,vz,omega,status,iterations,seconds`
void write_log_header(std::ostream& os);
void write_log_record(std::ostream& os, const NmpcLogRecord& rec);

}  // namespace reftrack
