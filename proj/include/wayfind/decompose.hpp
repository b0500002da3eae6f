#pragma once

// Vertical-slab (trapezoidal) decomposition of a planar region given as a
// union of simple polygons minus a union of obstacle polygons.
//
// Every vertex x-coordinate and every edge crossing becomes a slab boundary;
// inside a slab no two edges cross, so the region is a stack of trapezoids.
// Consecutive inside intervals of a slab are merged, which makes the
// top and bottom edge of each trapezoid part of the region boundary.

#include <span>
#include <vector>

#include "wayfind/geometry.hpp"

namespace wayfind {

struct Trapezoid {
  int slab = 0;
  double x0 = 0.0, x1 = 0.0;
  double bottom0 = 0.0, bottom1 = 0.0;  // bottom edge y at x0 and x1
  double top0 = 0.0, top1 = 0.0;        // top edge y at x0 and x1

  /// Counter-clockwise ring with degenerate corners dropped (3 or 4 points).
  Polygon ring() const;
  double area() const { return 0.5 * ((top0 - bottom0) + (top1 - bottom1)) * (x1 - x0); }
};

struct Decomposition {
  std::vector<double> slab_x;          // slab boundaries, size = slabs + 1
  std::vector<std::vector<int>> slabs;  // trapezoid indices per slab, bottom to top
  std::vector<Trapezoid> cells;
};

Decomposition decompose(std::span<const Polygon> walkable, std::span<const Polygon> obstacles);

/// Shared vertical interval between cell a (left) and cell b (right).
struct SharedSide {
  int left = 0;
  int right = 0;
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<SharedSide> shared_sides(const Decomposition& d);

/// Boundary of the decomposed region as maximal collinear segments.
std::vector<Segment> region_boundary(const Decomposition& d);

}  // namespace wayfind
