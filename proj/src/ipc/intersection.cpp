#include "pdipc/ipc/intersection.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <numeric>

namespace pdipc::ipc {

bool segment_intersects_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 n = (b - a).cross(c - a);
    const double nn = n.norm();
    if (nn == 0) {
        return false;
    }
    const double dp = n.dot(p - a) / nn;
    const double dq = n.dot(q - a) / nn;
    // Endpoints within round-off of the plane do not count as a crossing; a
    // grazing or coplanar contact has zero vt / ee distance and is caught there.
    const double eps = 1e-12 * std::max({(p - a).norm(), (q - a).norm(), (b - a).norm(), (c - a).norm()});
    if (!((dp > eps && dq < -eps) || (dp < -eps && dq > eps))) {
        return false;
    }
    const Vec3 x = p + (dp / (dp - dq)) * (q - p);
    const double w0 = n.dot((b - a).cross(x - a));
    const double w1 = n.dot((c - b).cross(x - b));
    const double w2 = n.dot((a - c).cross(x - c));
    return (w0 > 0 && w1 > 0 && w2 > 0) || (w0 < 0 && w1 < 0 && w2 < 0);
}

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0, const Vec3& b1,
                         const Vec3& b2)
{
    return segment_intersects_triangle(a0, a1, b0, b1, b2) || segment_intersects_triangle(a1, a2, b0, b1, b2) ||
           segment_intersects_triangle(a2, a0, b0, b1, b2) || segment_intersects_triangle(b0, b1, a0, a1, a2) ||
           segment_intersects_triangle(b1, b2, a0, a1, a2) || segment_intersects_triangle(b2, b0, a0, a1, a2);
}

int count_intersecting_triangle_pairs(const std::vector<std::array<int, 3>>& triangles,
                                      const std::vector<Vec3>& s)
{
    const int nt = static_cast<int>(triangles.size());
    std::vector<Eigen::AlignedBox3d> boxes(nt);
    for (int t = 0; t < nt; ++t) {
        for (int v : triangles[t]) {
            boxes[t].extend(s[v]);
        }
    }
    // Sweep and prune along x.
    std::vector<int> order(nt);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return boxes[a].min().x() < boxes[b].min().x(); });
    int count = 0;
    for (int oi = 0; oi < nt; ++oi) {
        const int i = order[oi];
        const auto& ti = triangles[i];
        for (int oj = oi + 1; oj < nt && boxes[order[oj]].min().x() <= boxes[i].max().x(); ++oj) {
            const int j = order[oj];
            const auto& tj = triangles[j];
            bool shared = false;
            for (int a : ti) {
                for (int b : tj) {
                    shared = shared || a == b;
                }
            }
            if (shared || !boxes[i].intersects(boxes[j])) {
                continue;
            }
            if (triangles_intersect(s[ti[0]], s[ti[1]], s[ti[2]], s[tj[0]], s[tj[1]], s[tj[2]])) {
                ++count;
            }
        }
    }
    return count;
}

}  // namespace pdipc::ipc
