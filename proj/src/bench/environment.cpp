#include "reftrack/bench/environment.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace reftrack {

ForestParams ForestParams::from_config(const BenchConfig& cfg) {
  ForestParams p;
  p.extent = cfg.extent;
  p.n_obstacles = cfg.n_obstacles;
  p.radius_min = cfg.radius_min;
  p.radius_max = cfg.radius_max;
  p.height_min = p.height_max = cfg.extent.z();
  p.start = cfg.start;
  p.goal = cfg.goal;
  p.d_z = cfg.d_z;
  return p;
}

double Environment::clearance(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& b : obstacles) d = std::min(d, distance_to_box(b, p));
  return d;
}

Environment generate_forest(std::uint64_t seed, const ForestParams& params) {
  if ((params.extent.array() <= 0.0).any()) throw InvalidArgument("extent must be positive");
  if (params.n_obstacles < 0 || !(params.radius_min > 0.0) || params.radius_max < params.radius_min ||
      !(params.height_min > 0.0) || params.height_max < params.height_min)
    throw InvalidArgument("invalid forest parameters");
  for (const Vec3* p : {&params.start, &params.goal})
    if ((p->array() < 0.0).any() || (p->array() > params.extent.array()).any())
      throw InvalidArgument("start and goal must lie inside the extent");

  Environment env;
  env.seed = seed;
  env.extent = params.extent;
  env.start = params.start;
  env.goal = params.goal;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, params.extent.x());
  std::uniform_real_distribution<double> uy(0.0, params.extent.y());
  std::uniform_real_distribution<double> ur(params.radius_min, params.radius_max);
  std::uniform_real_distribution<double> uh(params.height_min, params.height_max);
  const double keep_out = params.d_z + params.radius_max;
  const long budget = static_cast<long>(params.max_attempts_per_obstacle) * std::max(1, params.n_obstacles);
  long attempts = 0;
  while (static_cast<int>(env.obstacles.size()) < params.n_obstacles) {
    if (attempts++ >= budget)
      throw GenerationFailed("placed " + std::to_string(env.obstacles.size()) + " of " +
                             std::to_string(params.n_obstacles) + " obstacles");
    const double x = ux(rng), y = uy(rng), r = ur(rng), h = uh(rng);
    const Eigen::Vector2d c(x, y);
    if ((c - params.start.head<2>()).norm() < keep_out || (c - params.goal.head<2>()).norm() < keep_out) continue;
    Box b;
    b.center = Vec3(x, y, 0.5 * h);
    b.size = Vec3(2 * r, 2 * r, h);
    env.obstacles.push_back(b);
  }
  return env;
}

VoxelGrid rasterize(const Environment& env, double resolution) {
  VoxelGrid grid = VoxelGrid::covering(Vec3::Zero(), env.extent, resolution);
  for (const auto& b : env.obstacles) {
    const Index3 lo = grid.index_of_unchecked(b.lo()).cwiseMax(Index3::Zero());
    const Index3 hi = grid.index_of_unchecked(b.hi()).cwiseMin(grid.dims() - Index3::Ones());
    for (int z = lo.z(); z <= hi.z(); ++z)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int x = lo.x(); x <= hi.x(); ++x) {
          const Index3 idx(x, y, z);
          const Vec3 c = grid.center(idx);
          if ((c.array() >= b.lo().array()).all() && (c.array() <= b.hi().array()).all()) grid.set_occupied(idx);
        }
  }
  return grid;
}

void write_environment(std::ostream& os, const Environment& env) {
  os << std::setprecision(17);
  os << "seed " << env.seed << '\n';
  os << "extent " << env.extent.x() << ' ' << env.extent.y() << ' ' << env.extent.z() << '\n';
  os << "start " << env.start.x() << ' ' << env.start.y() << ' ' << env.start.z() << '\n';
  os << "goal " << env.goal.x() << ' ' << env.goal.y() << ' ' << env.goal.z() << '\n';
  for (const auto& b : env.obstacles) {
    os << "box " << b.center.x() << ' ' << b.center.y() << ' ' << b.center.z() << ' ' << b.size.x() << ' '
       << b.size.y() << ' ' << b.size.z() << '\n';
  }
}

Environment read_environment(std::istream& is) {
  Environment env;
  std::string line;
  int lineno = 0;
  bool have_extent = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    auto read3 = [&](Vec3& v) {
      if (!(ls >> v.x() >> v.y() >> v.z())) throw InvalidArgument("malformed line " + std::to_string(lineno));
    };
    if (tag == "seed") {
      if (!(ls >> env.seed)) throw InvalidArgument("malformed line " + std::to_string(lineno));
    } else if (tag == "extent") {
      read3(env.extent);
      have_extent = true;
    } else if (tag == "start") {
      read3(env.start);
    } else if (tag == "goal") {
      read3(env.goal);
    } else if (tag == "box") {
      Box b;
      read3(b.center);
      read3(b.size);
      env.obstacles.push_back(b);
    } else {
      throw InvalidArgument("unknown tag '" + tag + "' on line " + std::to_string(lineno));
    }
  }
  if (!have_extent) throw InvalidArgument("environment has no extent");
  return env;
}

Environment read_environment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open environment " + path);
  return read_environment(in);
}

}  // namespace reftrack
