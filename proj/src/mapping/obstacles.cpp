#include "reftrack/mapping/obstacles.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace reftrack {

BoxList read_boxes(std::istream& is) {
  BoxList boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Box b;
    if (!(ls >> b.center.x())) continue;
    if (!(ls >> b.center.y() >> b.center.z() >> b.size.x() >> b.size.y() >> b.size.z())) {
      throw InvalidArgument("malformed obstacle line " + std::to_string(lineno));
    }
    if ((b.size.array() < 0.0).any() || !is_finite(b.center) || !is_finite(b.size)) {
      throw InvalidArgument("invalid obstacle on line " + std::to_string(lineno));
    }
    boxes.push_back(b);
  }
  return boxes;
}

void write_boxes(std::ostream& os, const BoxList& boxes) {
  os << std::setprecision(17);
  for (const auto& b : boxes) {
    os << b.center.x() << ' ' << b.center.y() << ' ' << b.center.z() << ' ' << b.size.x() << ' '
       << b.size.y() << ' ' << b.size.z() << '\n';
  }
}

namespace {

std::vector<double> ticks(double lo, double hi, double spacing) {
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / spacing - 1e-9)));
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = lo + (hi - lo) * i / n;
  return t;
}

}  // namespace

Vec3List sample_box_surface(const Box& box, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("sampling spacing must be positive");
  const Vec3 lo = box.lo();
  const Vec3 hi = box.hi();
  Vec3List pts;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const auto tu = ticks(lo[u], hi[u], spacing);
    const auto tv = ticks(lo[v], hi[v], spacing);
    for (double side : {lo[axis], hi[axis]}) {
      for (double a : tu) {
        for (double b : tv) {
          Vec3 p;
          p[axis] = side;
          p[u] = a;
          p[v] = b;
          pts.push_back(p);
        }
      }
    }
  }
  return pts;
}

Vec3List sample_surfaces(const BoxList& boxes, double spacing) {
  Vec3List all;
  for (const auto& b : boxes) {
    auto pts = sample_box_surface(b, spacing);
    all.insert(all.end(), pts.begin(), pts.end());
  }
  return all;
}

double distance_to_box(const Box& box, const Vec3& p) {
  const Vec3 d = ((box.lo() - p).cwiseMax(p - box.hi())).cwiseMax(Vec3::Zero());
  return d.norm();
}

}  // namespace reftrack
