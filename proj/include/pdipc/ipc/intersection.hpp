#pragma once

#include "pdipc/mesh.hpp"

#include <vector>

namespace pdipc::ipc {

// True when segment pq passes through triangle abc (non-coplanar configurations).
bool segment_intersects_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0, const Vec3& b1,
                         const Vec3& b2);

// Number of crossing pairs among triangles that share no vertex (every pair
// with overlapping bounds is tested exactly).
int count_intersecting_triangle_pairs(const std::vector<std::array<int, 3>>& triangles,
                                      const std::vector<Vec3>& s);

}  // namespace pdipc::ipc
