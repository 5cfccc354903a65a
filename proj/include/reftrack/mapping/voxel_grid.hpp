#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "reftrack/core/types.hpp"

namespace reftrack {

using Index3 = Eigen::Vector3i;

/// Dense axis-aligned occupancy grid. Voxel (i, j, k) covers
/// [origin + (i, j, k) * resolution, origin + (i+1, j+1, k+1) * resolution).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const Index3& dims);

  /// Grid covering the box [lo, hi] (rounded outward to whole voxels).
  static VoxelGrid covering(const Vec3& lo, const Vec3& hi, double resolution);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t num_voxels() const { return occupancy_.size(); }
  Vec3 upper_corner() const { return origin_ + dims_.cast<double>() * resolution_; }

  bool contains(const Index3& idx) const {
    return (idx.array() >= 0).all() && (idx.array() < dims_.array()).all();
  }
  std::size_t linear(const Index3& idx) const {
    return (static_cast<std::size_t>(idx.z()) * dims_.y() + idx.y()) * dims_.x() + idx.x();
  }
  Index3 unlinear(std::size_t lin) const;

  /// Voxel holding p, or nullopt when p is outside the grid.
  std::optional<Index3> index_of(const Vec3& p) const;
  Index3 index_of_unchecked(const Vec3& p) const;
  Vec3 center(const Index3& idx) const {
    return origin_ + (idx.cast<double>().array() + 0.5).matrix() * resolution_;
  }

  bool occupied(const Index3& idx) const { return occupancy_[linear(idx)] != 0; }
  bool occupied(std::size_t lin) const { return occupancy_[lin] != 0; }
  void set_occupied(const Index3& idx, bool value = true) { occupancy_[linear(idx)] = value ? 1 : 0; }
  void clear();
  std::size_t count_occupied() const;

  /// Marks voxels holding points within update_range of sensor_origin.
  /// Points farther away or outside the grid are ignored; existing occupancy
  /// is retained. Returns the number of voxels that changed state.
  std::size_t insert_points(const Vec3List& points, const Vec3& sensor_origin, double update_range);

  /// Copy of the sub-block [lo_idx, lo_idx + dims) (clipped to this grid).
  VoxelGrid crop(const Index3& lo_idx, const Index3& dims) const;

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

 private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 1.0;
  Index3 dims_ = Index3::Zero();
  std::vector<std::uint8_t> occupancy_;
};

/// Functional form: returns a copy of `grid` with the points inserted.
VoxelGrid insert_points(VoxelGrid grid, const Vec3List& points, const Vec3& sensor_origin,
                        double update_range);

}  // namespace reftrack
