#include "reftrack/mapping/voxel_grid.hpp"

#include <algorithm>

namespace reftrack {

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, const Index3& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0)) throw InvalidArgument("voxel resolution must be positive");
  if ((dims.array() <= 0).any()) throw InvalidArgument("grid dimensions must be positive");
  if (!is_finite(origin)) throw InvalidArgument("grid origin must be finite");
  occupancy_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), 0);
}

VoxelGrid VoxelGrid::covering(const Vec3& lo, const Vec3& hi, double resolution) {
  Index3 dims;
  for (int a = 0; a < 3; ++a) {
    dims[a] = std::max(1, static_cast<int>(std::ceil((hi[a] - lo[a]) / resolution - 1e-9)));
  }
  return VoxelGrid(lo, resolution, dims);
}

Index3 VoxelGrid::unlinear(std::size_t lin) const {
  const int x = static_cast<int>(lin % dims_.x());
  lin /= dims_.x();
  const int y = static_cast<int>(lin % dims_.y());
  const int z = static_cast<int>(lin / dims_.y());
  return {x, y, z};
}

Index3 VoxelGrid::index_of_unchecked(const Vec3& p) const {
  const Vec3 rel = (p - origin_) / resolution_;
  return Index3(static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
                static_cast<int>(std::floor(rel.z())));
}

std::optional<Index3> VoxelGrid::index_of(const Vec3& p) const {
  if (!is_finite(p)) return std::nullopt;
  const Index3 idx = index_of_unchecked(p);
  if (!contains(idx)) return std::nullopt;
  return idx;
}

void VoxelGrid::clear() { std::fill(occupancy_.begin(), occupancy_.end(), 0); }

std::size_t VoxelGrid::count_occupied() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

std::size_t VoxelGrid::insert_points(const Vec3List& points, const Vec3& sensor_origin,
                                     double update_range) {
  std::size_t changed = 0;
  const double r2 = update_range * update_range;
  for (const auto& p : points) {
    if (!is_finite(p)) throw InvalidArgument("inserted points must be finite");
    if ((p - sensor_origin).squaredNorm() > r2) continue;
    const auto idx = index_of(p);
    if (!idx) continue;
    auto& cell = occupancy_[linear(*idx)];
    if (cell == 0) {
      cell = 1;
      ++changed;
    }
  }
  return changed;
}

VoxelGrid VoxelGrid::crop(const Index3& lo_idx, const Index3& dims) const {
  Index3 lo = lo_idx.cwiseMax(Index3::Zero());
  Index3 hi = (lo_idx + dims).cwiseMin(dims_);
  Index3 d = (hi - lo).cwiseMax(Index3::Ones());
  VoxelGrid out(origin_ + lo.cast<double>() * resolution_, resolution_, d);
  for (int z = 0; z < d.z(); ++z) {
    for (int y = 0; y < d.y(); ++y) {
      for (int x = 0; x < d.x(); ++x) {
        const Index3 src(lo.x() + x, lo.y() + y, lo.z() + z);
        if (contains(src) && occupied(src)) out.set_occupied(Index3(x, y, z));
      }
    }
  }
  return out;
}

VoxelGrid insert_points(VoxelGrid grid, const Vec3List& points, const Vec3& sensor_origin,
                        double update_range) {
  grid.insert_points(points, sensor_origin, update_range);
  return grid;
}

}  // namespace reftrack
