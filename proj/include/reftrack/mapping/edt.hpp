#pragma once

#include "reftrack/core/bspline.hpp"
#include "reftrack/mapping/voxel_grid.hpp"

namespace reftrack {

struct DistanceQuery {
  double distance = 0.0;
  bool inside = false;  // false: p outside the grid, distance is max_distance
};

/// Immutable snapshot of a grid plus the Euclidean distance from every voxel
/// center to the nearest occupied voxel center, clamped at max_distance.
class EdtMap {
 public:
  EdtMap() = default;
  EdtMap(VoxelGrid grid, std::vector<double> distance, double max_distance);

  const VoxelGrid& grid() const { return grid_; }
  double max_distance() const { return max_distance_; }
  double distance_at(const Index3& idx) const { return distance_[grid_.linear(idx)]; }
  const std::vector<double>& distances() const { return distance_; }

  /// Nearest-voxel lookup.
  DistanceQuery query(const Vec3& p) const;
  double distance(const Vec3& p) const { return query(p).distance; }

  /// Centers of occupied voxels inside the axis-aligned box [lo, hi], in
  /// increasing linear voxel index order.
  Vec3List occupied_in_box(const Vec3& lo, const Vec3& hi) const;

 private:
  VoxelGrid grid_;
  std::vector<double> distance_;
  double max_distance_ = 5.0;
};

/// Exact separable transform (three passes of the 1-D lower envelope of parabolas).
EdtMap compute_edt(const VoxelGrid& grid, double max_distance = 5.0);

double query_distance(const EdtMap& edt, const Vec3& p);

/// Occupied voxel centers within the closed ball of `radius` around any window
/// point; deduplicated and sorted by distance to the window's first point
/// (ties by voxel index).
Vec3List close_in_obstacles(const EdtMap& edt, const TrajectoryWindow& win, double radius);

}  // namespace reftrack
