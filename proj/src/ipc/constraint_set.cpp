#include "pdipc/ipc/constraint_set.hpp"

#include "pdipc/ipc/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace pdipc::ipc {

double ConstraintSet::min_distance() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : vt_pairs) {
        m = std::min(m, p.distance);
    }
    for (const auto& p : ee_pairs) {
        m = std::min(m, p.distance);
    }
    return m;
}

bool vertex_in_triangle(int v, const std::array<int, 3>& tri)
{
    return v == tri[0] || v == tri[1] || v == tri[2];
}

bool edges_share_vertex(const std::array<int, 2>& a, const std::array<int, 2>& b)
{
    return a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1];
}

namespace {

using Box = Eigen::AlignedBox3d;

class SpatialHash {
public:
    SpatialHash(const std::vector<Box>& boxes, double cell) : cell_(cell)
    {
        for (const auto& b : boxes) {
            if (!b.isEmpty()) {
                origin_ = origin_.cwiseMin(b.min());
            }
        }
        for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
            for_each_cell(boxes[i], [&](long long key) { cells_[key].push_back(i); });
        }
    }

    template <typename F>
    void for_each_cell(const Box& b, F&& f) const
    {
        const auto lo = coords(b.min());
        const auto hi = coords(b.max());
        for (long i = lo[0]; i <= hi[0]; ++i) {
            for (long j = lo[1]; j <= hi[1]; ++j) {
                for (long k = lo[2]; k <= hi[2]; ++k) {
                    f(key(i, j, k));
                }
            }
        }
    }

    const std::vector<int>* cell(long long key) const
    {
        const auto it = cells_.find(key);
        return it == cells_.end() ? nullptr : &it->second;
    }

private:
    std::array<long, 3> coords(const Vec3& p) const
    {
        const Vec3 r = (p - origin_) / cell_;
        return {static_cast<long>(std::floor(r[0])), static_cast<long>(std::floor(r[1])),
                static_cast<long>(std::floor(r[2]))};
    }
    static long long key(long i, long j, long k)
    {
        return ((static_cast<long long>(i) + 1048576) << 42) |
               ((static_cast<long long>(j) + 1048576) << 21) | (static_cast<long long>(k) + 1048576);
    }

    double cell_;
    Vec3 origin_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    std::unordered_map<long long, std::vector<int>> cells_;
};

template <std::size_t K>
Box primitive_box(const std::array<int, K>& ids, const std::vector<Vec3>& s, const std::vector<Vec3>& ds)
{
    Box b;
    for (int v : ids) {
        b.extend(s[v]);
        if (!ds.empty()) {
            b.extend(s[v] + ds[v]);
        }
    }
    return b;
}

Box inflate(Box b, double margin)
{
    b.min().array() -= margin;
    b.max().array() += margin;
    return b;
}

}  // namespace

CandidatePairs find_candidates(const EmbeddedSurface& surface, const std::vector<Vec3>& s,
                               const std::vector<Vec3>& ds, double margin)
{
    CandidatePairs out;
    const int nv = surface.num_vertices();
    const int nt = static_cast<int>(surface.triangles.size());
    const int ne = static_cast<int>(surface.edges.size());
    if (nt == 0) {
        return out;
    }

    std::vector<Box> tri_boxes(nt), edge_boxes(ne);
    double extent = 0;
    for (int t = 0; t < nt; ++t) {
        tri_boxes[t] = primitive_box(surface.triangles[t], s, ds);
        extent += tri_boxes[t].diagonal().maxCoeff();
    }
    for (int e = 0; e < ne; ++e) {
        edge_boxes[e] = primitive_box(surface.edges[e], s, ds);
    }
    const double cell = std::max(extent / nt + margin, 1e-12);

    {
        const SpatialHash hash(tri_boxes, cell);
        std::vector<int> stamp(nt, -1);
        for (int v = 0; v < nv; ++v) {
            const Box q = inflate(primitive_box(std::array<int, 1>{v}, s, ds), margin);
            hash.for_each_cell(q, [&](long long key) {
                const auto* list = hash.cell(key);
                if (!list) {
                    return;
                }
                for (int t : *list) {
                    if (stamp[t] == v) {
                        continue;
                    }
                    stamp[t] = v;
                    if (!vertex_in_triangle(v, surface.triangles[t]) && q.intersects(tri_boxes[t])) {
                        out.vt.emplace_back(v, t);
                    }
                }
            });
        }
    }
    {
        const SpatialHash hash(edge_boxes, cell);
        std::vector<int> stamp(ne, -1);
        for (int a = 0; a < ne; ++a) {
            const Box q = inflate(edge_boxes[a], margin);
            hash.for_each_cell(q, [&](long long key) {
                const auto* list = hash.cell(key);
                if (!list) {
                    return;
                }
                for (int b : *list) {
                    if (b <= a || stamp[b] == a) {
                        continue;
                    }
                    stamp[b] = a;
                    if (!edges_share_vertex(surface.edges[a], surface.edges[b]) && q.intersects(edge_boxes[b])) {
                        out.ee.emplace_back(a, b);
                    }
                }
            });
        }
    }
    std::sort(out.vt.begin(), out.vt.end());
    std::sort(out.ee.begin(), out.ee.end());
    return out;
}

ConstraintSet build_constraint_set(const EmbeddedSurface& surface, const std::vector<Vec3>& s, double d0)
{
    ConstraintSet set;
    set.d0 = d0;
    const auto cands = find_candidates(surface, s, {}, d0);
    for (const auto& [v, t] : cands.vt) {
        const auto& tri = surface.triangles[t];
        const double d = point_triangle_distance(s[v], s[tri[0]], s[tri[1]], s[tri[2]]).distance;
        if (d < d0) {
            set.vt_pairs.push_back({v, t, d});
        }
    }
    for (const auto& [a, b] : cands.ee) {
        const auto& ea = surface.edges[a];
        const auto& eb = surface.edges[b];
        const double d = edge_edge_distance(s[ea[0]], s[ea[1]], s[eb[0]], s[eb[1]]).distance;
        if (d < d0) {
            set.ee_pairs.push_back({a, b, d});
        }
    }
    return set;
}

double minimum_distance(const EmbeddedSurface& surface, const std::vector<Vec3>& s, double radius)
{
    return build_constraint_set(surface, s, radius).min_distance();
}

}  // namespace pdipc::ipc
