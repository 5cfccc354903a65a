#pragma once

#include <iosfwd>

#include "reftrack/core/types.hpp"

namespace reftrack {

/// Axis-aligned box obstacle, center and full size in meters.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();

  Vec3 lo() const { return center - 0.5 * size; }
  Vec3 hi() const { return center + 0.5 * size; }
};

using BoxList = std::vector<Box>;

/// One box per line: `cx cy cz sx sy sz`. Blank lines and '#' comments are skipped.
BoxList read_boxes(std::istream& is);
void write_boxes(std::ostream& os, const BoxList& boxes);

/// Points on the box surface spaced at most `spacing` apart on every face.
Vec3List sample_box_surface(const Box& box, double spacing);
Vec3List sample_surfaces(const BoxList& boxes, double spacing);

/// Euclidean distance from p to the solid box (0 inside).
double distance_to_box(const Box& box, const Vec3& p);

}  // namespace reftrack
