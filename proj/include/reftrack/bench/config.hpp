#pragma once

#include <iosfwd>
#include <string>

#include "reftrack/global/global_planner.hpp"
#include "reftrack/local/nmpc.hpp"

namespace reftrack {

/// Flat key=value benchmark configuration. Keys mirror the field names.
struct BenchConfig {
  double delta_td = 0.05;
  double delta_tc = 0.05;
  double d_z = 0.8;
  double lambda_smooth = 0.2;
  double lambda_obs = 0.6;
  double lambda_feasibility = 0.2;
  double lambda1 = 0.8;
  double lambda2 = 0.8;
  double lambda3 = 0.6;
  double v_max = 0.6;
  double a_max = 1.0;
  double omega_max = 1.0;
  int n_p = 15;
  int n_r = 30;
  double update_range = 6.0;
  double resolution = 0.2;
  double q_pos = 100;
  double q_yaw = 1;
  double r_v = 1;
  double r_omega = 0.1;
  double goal_tol = 0.5;
  double collision_radius = 0.4;
  double rate_global = 20;
  double rate_local = 15;

  // Reference and harness settings.
  double ref_speed = 0.6;
  double timeout = 300.0;
  /// The episode ends as a failure once the vehicle has moved less than
  /// stall_distance over the last stall_window seconds (0 disables).
  double stall_window = 60.0;
  double stall_distance = 0.5;
  /// Half-width of the map block around the vehicle fed to the EDT.
  double edt_crop = 3.0;
  /// The reference clock pauses while the vehicle trails its reference point by more than this.
  double max_lag = 1.0;
  int max_obstacles = 10;
  int sqp_max_iter = 30;

  // Forest generation.
  int n_obstacles = 60;
  double radius_min = 0.3;
  double radius_max = 0.8;
  Vec3 extent = Vec3(40, 40, 10);
  Vec3 start = Vec3(0.7, 20, 2);
  Vec3 goal = Vec3(39.3, 20, 2);

  void validate() const;
  GlobalConfig global() const;
  NmpcConfig nmpc() const;
};

/// Unknown keys and malformed values raise InvalidArgument naming the line.
BenchConfig parse_config(std::istream& is);
BenchConfig read_config_file(const std::string& path);
void write_config(std::ostream& os, const BenchConfig& cfg);

}  // namespace reftrack
