#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace reftrack {

using Vec3 = Eigen::Vector3d;
using Vec3List = std::vector<Vec3, Eigen::aligned_allocator<Vec3>>;

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

/// Raised for malformed inputs that violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Pose of the vehicle: position plus heading.
struct AgentState {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  AgentState() = default;
  AgentState(const Vec3& p, double y) : position(p), yaw(wrap_angle(y)) {}
};

}  // namespace reftrack
