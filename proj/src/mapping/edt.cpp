#include "reftrack/mapping/edt.hpp"

#include <algorithm>
#include <limits>

namespace reftrack {

namespace {

constexpr double kFar = 1e20;

// Squared distance transform of one line (Felzenszwalb & Huttenlocher).
// f and d have length n; v and z are scratch buffers of size n and n + 1.
void transform_line(const double* f, double* d, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

EdtMap::EdtMap(VoxelGrid grid, std::vector<double> distance, double max_distance)
    : grid_(std::move(grid)), distance_(std::move(distance)), max_distance_(max_distance) {
  if (distance_.size() != grid_.num_voxels()) throw InvalidArgument("distance field size mismatch");
}

DistanceQuery EdtMap::query(const Vec3& p) const {
  const auto idx = grid_.index_of(p);
  if (!idx) return {max_distance_, false};
  return {distance_at(*idx), true};
}

Vec3List EdtMap::occupied_in_box(const Vec3& lo, const Vec3& hi) const {
  Vec3List out;
  const double res = grid_.resolution();
  Index3 a, b;
  for (int ax = 0; ax < 3; ++ax) {
    // Voxels whose centers can fall inside [lo, hi].
    a[ax] = std::max(0, static_cast<int>(std::floor((lo[ax] - grid_.origin()[ax]) / res - 0.5)));
    b[ax] = std::min(grid_.dims()[ax] - 1,
                     static_cast<int>(std::ceil((hi[ax] - grid_.origin()[ax]) / res - 0.5)));
  }
  for (int z = a.z(); z <= b.z(); ++z) {
    for (int y = a.y(); y <= b.y(); ++y) {
      for (int x = a.x(); x <= b.x(); ++x) {
        const Index3 idx(x, y, z);
        if (!grid_.occupied(idx)) continue;
        const Vec3 c = grid_.center(idx);
        if ((c.array() >= lo.array()).all() && (c.array() <= hi.array()).all()) out.push_back(c);
      }
    }
  }
  return out;
}

EdtMap compute_edt(const VoxelGrid& grid, double max_distance) {
  if (!(max_distance > 0.0)) throw InvalidArgument("max_distance must be positive");
  const Index3 dims = grid.dims();
  const std::size_t total = grid.num_voxels();
  std::vector<double> sq(total);
  for (std::size_t i = 0; i < total; ++i) sq[i] = grid.occupied(i) ? 0.0 : kFar;

  const int longest = dims.maxCoeff();
  std::vector<double> f(longest), d(longest), z(longest + 1);
  std::vector<int> v(longest);

  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(dims.x());
  const std::size_t sz = sy * dims.y();
  auto pass = [&](int n, std::size_t stride, int count_a, std::size_t stride_a, int count_b,
                  std::size_t stride_b) {
    for (int b = 0; b < count_b; ++b) {
      for (int a = 0; a < count_a; ++a) {
        const std::size_t base = a * stride_a + b * stride_b;
        for (int q = 0; q < n; ++q) f[q] = sq[base + q * stride];
        transform_line(f.data(), d.data(), n, v.data(), z.data());
        for (int q = 0; q < n; ++q) sq[base + q * stride] = std::min(d[q], kFar);
      }
    }
  };
  pass(dims.x(), sx, dims.y(), sy, dims.z(), sz);
  pass(dims.y(), sy, dims.x(), sx, dims.z(), sz);
  pass(dims.z(), sz, dims.x(), sx, dims.y(), sy);

  std::vector<double> dist(total);
  const double res = grid.resolution();
  for (std::size_t i = 0; i < total; ++i) {
    dist[i] = sq[i] >= kFar * 0.5 ? max_distance : std::min(max_distance, std::sqrt(sq[i]) * res);
  }
  return EdtMap(grid, std::move(dist), max_distance);
}

double query_distance(const EdtMap& edt, const Vec3& p) { return edt.distance(p); }

Vec3List close_in_obstacles(const EdtMap& edt, const TrajectoryWindow& win, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("close-in radius must be positive");
  if (win.points.empty()) return {};
  const VoxelGrid& grid = edt.grid();
  const double r2 = radius * radius;
  const double tol = 1e-12 * std::max(1.0, r2);
  std::vector<std::size_t> hits;
  for (const auto& p : win.points) {
    const Vec3 lo = p - Vec3::Constant(radius);
    const Vec3 hi = p + Vec3::Constant(radius);
    Index3 a = grid.index_of_unchecked(lo).cwiseMax(Index3::Zero());
    Index3 b = grid.index_of_unchecked(hi).cwiseMin(grid.dims() - Index3::Ones());
    for (int z = a.z(); z <= b.z(); ++z) {
      for (int y = a.y(); y <= b.y(); ++y) {
        for (int x = a.x(); x <= b.x(); ++x) {
          const Index3 idx(x, y, z);
          const std::size_t lin = grid.linear(idx);
          if (!grid.occupied(lin)) continue;
          if ((grid.center(idx) - p).squaredNorm() <= r2 + tol) hits.push_back(lin);
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  const Vec3 first = win.points.front();
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(hits.size());
  for (auto lin : hits) keyed.emplace_back((grid.center(grid.unlinear(lin)) - first).squaredNorm(), lin);
  std::sort(keyed.begin(), keyed.end());
  Vec3List out;
  out.reserve(keyed.size());
  for (const auto& [d2, lin] : keyed) out.push_back(grid.center(grid.unlinear(lin)));
  return out;
}

}  // namespace reftrack
