#include "reftrack/core/bspline.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace reftrack {

namespace {

// Rows: power basis coefficients of the uniform cubic B-spline blending functions.
const Eigen::Matrix4d& basis_matrix() {
  static const Eigen::Matrix4d m = [] {
    Eigen::Matrix4d b;
    b << 1, 4, 1, 0,
        -3, 0, 3, 0,
        3, -6, 3, 0,
        -1, 3, -3, 1;
    return Eigen::Matrix4d(b / 6.0);
  }();
  return m;
}

}  // namespace

UniformBSpline::UniformBSpline(Vec3List control_points, double delta_td, double t0)
    : control_points_(std::move(control_points)), delta_td_(delta_td), t0_(t0) {
  if (static_cast<int>(control_points_.size()) < kDegree + 1) {
    throw InvalidArgument("uniform B-spline needs at least degree+1 control points");
  }
  if (!(delta_td_ > 0.0) || !std::isfinite(delta_td_)) {
    throw InvalidArgument("knot spacing must be positive");
  }
  if (!std::isfinite(t0_)) throw InvalidArgument("t0 must be finite");
  for (const auto& c : control_points_) {
    if (!is_finite(c)) throw InvalidArgument("control points must be finite");
  }
}

bool UniformBSpline::in_domain(double t) const { return t >= t_begin() && t <= t_end(); }

Vec3 UniformBSpline::evaluate(double t, int derivative_order) const {
  if (!in_domain(t)) throw InvalidArgument("evaluation time outside the spline domain");
  if (derivative_order < 0 || derivative_order > 2) {
    throw InvalidArgument("derivative order must be 0, 1 or 2");
  }
  const double rel = (t - t0_) / delta_td_;
  const int last_span = size() - kDegree - 1;
  int span = std::min(static_cast<int>(std::floor(rel)), last_span);
  const double u = rel - span;

  Eigen::RowVector4d powers;
  switch (derivative_order) {
    case 0: powers << 1.0, u, u * u, u * u * u; break;
    case 1: powers << 0.0, 1.0, 2.0 * u, 3.0 * u * u; break;
    default: powers << 0.0, 0.0, 2.0, 6.0 * u; break;
  }
  const Eigen::RowVector4d weights = powers * basis_matrix();
  Vec3 out = Vec3::Zero();
  for (int k = 0; k < 4; ++k) out += weights[k] * control_points_[span + k];
  return out / std::pow(delta_td_, derivative_order);
}

int UniformBSpline::index_at(double t_n) const {
  if (t_n < t0_) throw InvalidArgument("window time precedes trajectory start");
  // Small bias keeps exact multiples of delta_td from rounding down.
  const double rel = (t_n - t0_) / delta_td_ + 1e-9;
  const double idx = std::floor(rel);
  if (idx >= size() - 1) return size() - 1;
  return static_cast<int>(idx);
}

TrajectoryWindow UniformBSpline::window(double t_n, int length) const {
  if (length < 1) throw InvalidArgument("window length must be positive");
  TrajectoryWindow win;
  win.t_n = t_n;
  win.c_s = index_at(t_n);
  win.c_e = std::min(win.c_s + length - 1, size() - 1);
  win.points.assign(control_points_.begin() + win.c_s, control_points_.begin() + win.c_e + 1);
  return win;
}

void UniformBSpline::write_back(const TrajectoryWindow& win) {
  const int n = win.size() - win.prefix;
  if (n != win.c_e - win.c_s + 1 || win.c_s < 0 || win.c_e >= size()) {
    throw InvalidArgument("window does not match trajectory indices");
  }
  for (int k = 0; k < n; ++k) control_points_[win.c_s + k] = win.points[win.prefix + k];
}

void UniformBSpline::write_csv(std::ostream& os) const {
  os << std::setprecision(17);
  os << "# delta_td=" << delta_td_ << " t0=" << t0_ << " degree=" << kDegree << "\n";
  for (int i = 0; i < size(); ++i) {
    const auto& c = control_points_[i];
    os << i << "," << c.x() << "," << c.y() << "," << c.z() << "\n";
  }
}

UniformBSpline UniformBSpline::read_csv(std::istream& is) {
  std::string line;
  double delta = -1.0;
  double t0 = 0.0;
  int degree = kDegree;
  Vec3List pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "delta_td") delta = std::stod(val);
        else if (key == "t0") t0 = std::stod(val);
        else if (key == "degree") degree = std::stoi(val);
      }
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int idx;
    double x, y, z;
    if (!(ls >> idx >> x >> y >> z)) throw InvalidArgument("malformed trajectory row: " + line);
    if (idx != static_cast<int>(pts.size())) throw InvalidArgument("trajectory rows out of order");
    pts.emplace_back(x, y, z);
  }
  if (degree != kDegree) throw InvalidArgument("only cubic trajectories are supported");
  return UniformBSpline(std::move(pts), delta, t0);
}

UniformBSpline make_uniform_bspline(const Vec3List& control_points, double delta_td, double t0) {
  return UniformBSpline(control_points, delta_td, t0);
}

TrajectoryWindow prepend_pose(const TrajectoryWindow& win, const AgentState& q) {
  TrajectoryWindow out = win;
  out.points.insert(out.points.begin(), q.position);
  out.prefix = win.prefix + 1;
  return out;
}

Vec3List straight_line_control_points(const Vec3& start, const Vec3& goal, double speed,
                                      double delta_td) {
  if (!(speed > 0.0) || !(delta_td > 0.0)) throw InvalidArgument("speed and spacing must be positive");
  const double len = (goal - start).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (speed * delta_td))));
  Vec3List pts;
  pts.reserve(steps + 1 + UniformBSpline::kDegree);
  for (int i = 0; i <= steps; ++i) {
    pts.push_back(start + (goal - start) * (static_cast<double>(i) / steps));
  }
  for (int k = 0; k < UniformBSpline::kDegree; ++k) pts.push_back(goal);
  return pts;
}

}  // namespace reftrack
