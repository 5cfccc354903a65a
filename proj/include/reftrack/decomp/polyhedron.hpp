#pragma once

#include <iosfwd>

#include "reftrack/core/types.hpp"

namespace reftrack {

/// H-representation {x : normals[i] . x <= offsets[i]} with unit outward normals.
struct Polyhedron {
  Vec3List normals;
  std::vector<double> offsets;

  int rows() const { return static_cast<int>(normals.size()); }
  void add(const Vec3& normal, double offset) {
    normals.push_back(normal);
    offsets.push_back(offset);
  }

  /// max_i (n_i . x - b_i); <= 0 iff x is inside.
  double max_violation(const Vec3& x) const;
  bool contains(const Vec3& x, double tol = 0.0) const { return max_violation(x) <= tol; }
  /// True when some row strictly excludes x.
  bool excludes(const Vec3& x) const { return max_violation(x) > 0.0; }
};

/// Debug dump: one `nx ny nz b` row per half-space.
void write_polyhedron_csv(std::ostream& os, const Polyhedron& poly);

}  // namespace reftrack
