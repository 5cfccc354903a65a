#include "reftrack/decomp/decomposition.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

namespace reftrack {

double Polyhedron::max_violation(const Vec3& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows(); ++i) worst = std::max(worst, normals[i].dot(x) - offsets[i]);
  return worst;
}

void write_polyhedron_csv(std::ostream& os, const Polyhedron& poly) {
  os << std::setprecision(17);
  for (int i = 0; i < poly.rows(); ++i) {
    const auto& n = poly.normals[i];
    os << n.x() << ' ' << n.y() << ' ' << n.z() << ' ' << poly.offsets[i] << '\n';
  }
}

std::pair<Vec3, Vec3> segment_bbox(const Vec3& a, const Vec3& b, const Vec3& half) {
  return {a.cwiseMin(b) - half, a.cwiseMax(b) + half};
}

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Ellipsoid {x : (x-d)^T R diag(1/a1^2, 1/r^2, 1/r^2) R^T (x-d) <= 1}.
struct Ellipsoid {
  Vec3 center;
  Eigen::Matrix3d rot;  // columns: segment axis, two normals
  double a1;
  double r;

  Eigen::Matrix3d inv_shape() const {
    const Eigen::Vector3d w(1.0 / (a1 * a1), 1.0 / (r * r), 1.0 / (r * r));
    return rot * w.asDiagonal() * rot.transpose();
  }
  double dist2(const Vec3& p) const {
    const Vec3 q = rot.transpose() * (p - center);
    return q.x() * q.x() / (a1 * a1) + (q.y() * q.y() + q.z() * q.z()) / (r * r);
  }
};

Eigen::Matrix3d frame_along(const Vec3& axis) {
  Vec3 e1 = axis;
  // Deterministic completion of the orthonormal frame.
  Vec3 helper = std::abs(e1.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e2 = (helper - helper.dot(e1) * e1).normalized();
  Vec3 e3 = e1.cross(e2);
  Eigen::Matrix3d m;
  m.col(0) = e1;
  m.col(1) = e2;
  m.col(2) = e3;
  return m;
}

constexpr double kAxisPad = 1e-3;

}  // namespace

Polyhedron decompose_segment(const Vec3& a, const Vec3& b, const Vec3List& obstacles,
                             const DecompOptions& opts) {
  if (!is_finite(a) || !is_finite(b)) throw InvalidArgument("segment endpoints must be finite");
  if ((opts.bbox_half.array() <= 0.0).any()) throw InvalidArgument("bbox half extents must be positive");
  const auto [lo, hi] = segment_bbox(a, b, opts.bbox_half);

  std::vector<int> active;
  for (int i = 0; i < static_cast<int>(obstacles.size()); ++i) {
    const Vec3& o = obstacles[i];
    if ((o.array() < lo.array()).any() || (o.array() > hi.array()).any()) continue;
    if (point_segment_distance(o, a, b) < opts.segment_epsilon) {
      throw InfeasibleSegment("obstacle point lies on the segment");
    }
    active.push_back(i);
  }

  const double half_len = 0.5 * (b - a).norm();
  Ellipsoid ell;
  ell.center = 0.5 * (a + b);
  ell.rot = half_len > 0.0 ? frame_along((b - a).normalized()) : Eigen::Matrix3d::Identity();
  ell.a1 = half_len + kAxisPad;
  ell.r = ell.a1;

  // Shrink the minor axes until no obstacle is strictly inside.
  while (true) {
    int nearest = -1;
    double best = 1.0;
    for (int i : active) {
      const double d2 = ell.dist2(obstacles[i]);
      if (d2 < best) {
        best = d2;
        nearest = i;
      }
    }
    if (nearest < 0) break;
    const Vec3 q = ell.rot.transpose() * (obstacles[nearest] - ell.center);
    const double radial = std::hypot(q.y(), q.z());
    const double axial = std::min(std::abs(q.x()) / ell.a1, 1.0);
    const double denom = std::sqrt(std::max(0.0, 1.0 - axial * axial));
    const double new_r = denom > 0.0 ? radial / denom * (1.0 - 1e-12) : ell.r;
    if (!(new_r > 0.0) || new_r >= ell.r) {
      throw InfeasibleSegment("cannot shrink ellipsoid around segment");
    }
    ell.r = new_r;
  }

  Polyhedron poly;
  const Eigen::Matrix3d inv_shape = ell.inv_shape();
  std::vector<int> remaining = active;
  while (!remaining.empty()) {
    int pick = remaining.front();
    double best = ell.dist2(obstacles[pick]);
    for (int i : remaining) {
      const double d2 = ell.dist2(obstacles[i]);
      if (d2 < best) {
        best = d2;
        pick = i;
      }
    }
    const Vec3& o = obstacles[pick];
    const Vec3 normal = (inv_shape * (o - ell.center)).normalized();
    const double through = normal.dot(o);
    const double gap = through - std::max(normal.dot(a), normal.dot(b));
    if (!(gap > 0.0)) throw InfeasibleSegment("separating plane does not clear the segment");
    const double shift = std::max(std::min(opts.margin, 0.5 * gap), std::min(1e-9, 0.5 * gap));
    const double offset = through - shift;
    poly.add(normal, offset);
    std::vector<int> keep;
    keep.reserve(remaining.size());
    for (int i : remaining) {
      if (normal.dot(obstacles[i]) <= offset) keep.push_back(i);
    }
    remaining.swap(keep);
  }

  for (int axis = 0; axis < 3; ++axis) {
    poly.add(Vec3::Unit(axis), hi[axis]);
    poly.add(-Vec3::Unit(axis), -lo[axis]);
  }
  return poly;
}

std::vector<Polyhedron> decompose_parallel(const std::vector<Segment>& segments, const EdtMap& edt,
                                           const DecompOptions& opts, int parallelism) {
  if (segments.empty()) throw InvalidArgument("no segments to decompose");
  const int n = static_cast<int>(segments.size());
  int workers = parallelism > 0 ? parallelism : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);

  std::vector<Polyhedron> out(n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int first) {
    for (int i = first; i < n; i += workers) {
      try {
        const auto& [a, b] = segments[i];
        const auto [lo, hi] = segment_bbox(a, b, opts.bbox_half);
        out[i] = decompose_segment(a, b, edt.occupied_in_box(lo, hi), opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const InfeasibleSegment& e) {
      throw InfeasibleSegment(e.what(), i);
    }
  }
  return out;
}

}  // namespace reftrack
