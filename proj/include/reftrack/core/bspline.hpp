#pragma once

#include <iosfwd>
#include <string>

#include "reftrack/core/types.hpp"

namespace reftrack {

/// Contiguous slice of a trajectory's control points.
///
/// `c_s`/`c_e` index the parent trajectory. When the vehicle pose has been
/// prepended, `prefix` is 1 and `points[0]` is that pose, so the parent point
/// `c_s + k` lives at `points[k + prefix]`.
struct TrajectoryWindow {
  Vec3List points;
  int c_s = 0;
  int c_e = 0;
  double t_n = 0.0;
  int prefix = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// Uniform B-spline of fixed degree (cubic) over evenly spaced knots.
///
/// Span s (0 <= s < N_c - degree) starts at t0 + s * delta_td and blends
/// control points c_s .. c_{s+degree}. The evaluable domain is
/// [t0, t0 + (N_c - degree) * delta_td].
class UniformBSpline {
 public:
  static constexpr int kDegree = 3;

  UniformBSpline(Vec3List control_points, double delta_td, double t0 = 0.0);

  /// Position (order 0), velocity (order 1) or acceleration (order 2) at t.
  Vec3 evaluate(double t, int derivative_order = 0) const;

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + (size() - kDegree) * delta_td_; }
  bool in_domain(double t) const;

  double delta_td() const { return delta_td_; }
  double t0() const { return t0_; }
  int degree() const { return kDegree; }
  int size() const { return static_cast<int>(control_points_.size()); }
  const Vec3List& control_points() const { return control_points_; }
  const Vec3& control_point(int i) const { return control_points_.at(i); }

  /// Index of the control point whose knot interval holds t_n.
  int index_at(double t_n) const;

  /// Copies control points c_s .. c_e for the window starting at t_n.
  TrajectoryWindow window(double t_n, int length) const;

  /// Overwrites control points with the window's non-prefix points.
  void write_back(const TrajectoryWindow& win);

  void write_csv(std::ostream& os) const;
  static UniformBSpline read_csv(std::istream& is);

 private:
  Vec3List control_points_;
  double delta_td_;
  double t0_;
};

UniformBSpline make_uniform_bspline(const Vec3List& control_points, double delta_td,
                                    double t0 = 0.0);

/// Returns <q.position, win...>. Index bookkeeping is kept via `prefix`.
TrajectoryWindow prepend_pose(const TrajectoryWindow& win, const AgentState& q);

/// Straight-line control points from `start` to `goal` spaced by speed * delta_td.
/// The last `UniformBSpline::kDegree` points repeat the goal so the curve
/// comes to rest there.
Vec3List straight_line_control_points(const Vec3& start, const Vec3& goal, double speed,
                                      double delta_td);

}  // namespace reftrack
