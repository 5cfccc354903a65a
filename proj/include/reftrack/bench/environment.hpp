#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "reftrack/bench/config.hpp"
#include "reftrack/mapping/obstacles.hpp"
#include "reftrack/mapping/voxel_grid.hpp"

namespace reftrack {

class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForestParams {
  Vec3 extent = Vec3(40, 40, 10);
  int n_obstacles = 60;
  double radius_min = 0.3;
  double radius_max = 0.8;
  /// Pillar heights; the default spans the full extent.
  double height_min = 10.0;
  double height_max = 10.0;
  Vec3 start = Vec3(0.7, 20, 2);
  Vec3 goal = Vec3(39.3, 20, 2);
  double d_z = 0.8;
  int max_attempts_per_obstacle = 1000;

  static ForestParams from_config(const BenchConfig& cfg);
};

struct Environment {
  std::uint64_t seed = 0;
  Vec3 extent = Vec3::Zero();
  BoxList obstacles;
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();

  /// Exact distance from p to the nearest obstacle surface (0 inside).
  double clearance(const Vec3& p) const;
};

/// Square pillars standing on the ground, placed by seeded uniform sampling.
/// Placements whose footprint center lies within d_z + radius_max of the start
/// or goal are rejected.
Environment generate_forest(std::uint64_t seed, const ForestParams& params);

/// Voxelized obstacles: a voxel is occupied when its center lies in a box.
VoxelGrid rasterize(const Environment& env, double resolution);

/// Text format: `seed`, `extent`, `start`, `goal` lines, then one `box cx cy cz sx sy sz` per obstacle.
void write_environment(std::ostream& os, const Environment& env);
Environment read_environment(std::istream& is);
Environment read_environment_file(const std::string& path);

}  // namespace reftrack
