#pragma once

#include <stdexcept>
#include <utility>

#include "reftrack/decomp/polyhedron.hpp"
#include "reftrack/mapping/edt.hpp"

namespace reftrack {

/// No separating corridor: an obstacle point lies on (or within epsilon of) the segment.
class InfeasibleSegment : public std::runtime_error {
 public:
  InfeasibleSegment(const std::string& what, int segment_index = -1)
      : std::runtime_error(what), segment_index_(segment_index) {}
  int segment_index() const { return segment_index_; }

 private:
  int segment_index_;
};

struct DecompOptions {
  Vec3 bbox_half = Vec3(2.0, 2.0, 1.0);
  /// Inward shift of each obstacle half-space. Limited per plane so the
  /// generating endpoints stay inside.
  double margin = 0.0;
  /// Obstacles closer than this to the segment make it infeasible.
  double segment_epsilon = 1e-6;
};

using Segment = std::pair<Vec3, Vec3>;

/// Local bounding box of a segment: [min(a,b) - half, max(a,b) + half].
std::pair<Vec3, Vec3> segment_bbox(const Vec3& a, const Vec3& b, const Vec3& half);

/// Single-segment kernel of the ellipsoid-growth decomposition.
///
/// The result contains `a` and `b` strictly, excludes every obstacle point
/// by at least one row, and always includes the six bounding-box faces.
Polyhedron decompose_segment(const Vec3& a, const Vec3& b, const Vec3List& obstacles,
                             const DecompOptions& opts = {});

/// Decomposes every segment against the occupied voxel centers of `edt`
/// inside its local bounding box. Output order equals input order and is
/// identical for every `parallelism` (0 = hardware concurrency).
/// Throws InfeasibleSegment carrying the lowest failing segment index.
std::vector<Polyhedron> decompose_parallel(const std::vector<Segment>& segments, const EdtMap& edt,
                                           const DecompOptions& opts = {}, int parallelism = 0);

}  // namespace reftrack
