#include "pdipc/ipc/ccd.hpp"

#include "pdipc/ipc/constraint_set.hpp"
#include "pdipc/ipc/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdipc::ipc {

namespace {

struct MovingPair {
    std::array<int, 4> ids;
    bool vertex_triangle;
    double rate;  // bound on |d/dt distance| along the motion
};

double pair_distance(const MovingPair& p, const std::vector<Vec3>& s, const std::vector<Vec3>& ds, double t)
{
    std::array<Vec3, 4> x;
    for (int k = 0; k < 4; ++k) {
        x[k] = s[p.ids[k]] + t * ds[p.ids[k]];
    }
    return p.vertex_triangle ? point_triangle_distance(x[0], x[1], x[2], x[3]).distance
                             : edge_edge_distance(x[0], x[1], x[2], x[3]).distance;
}

}  // namespace

double ccd_max_step(const EmbeddedSurface& surface, const std::vector<Vec3>& s, const std::vector<Vec3>& ds,
                    const CcdOptions& options)
{
    if (s.size() != ds.size()) {
        throw ContractError("ccd: displacement size mismatch");
    }
    const bool moving = std::any_of(ds.begin(), ds.end(), [](const Vec3& d) { return d.squaredNorm() > 0; });
    if (!moving) {
        return 1.0;
    }

    const auto cands = find_candidates(surface, s, ds, 0.0);
    std::vector<MovingPair> pairs;
    pairs.reserve(cands.vt.size() + cands.ee.size());
    for (const auto& [v, t] : cands.vt) {
        const auto& tri = surface.triangles[t];
        double rate = 0;
        for (int k : tri) {
            rate = std::max(rate, (ds[v] - ds[k]).norm());
        }
        pairs.push_back({{v, tri[0], tri[1], tri[2]}, true, rate});
    }
    for (const auto& [a, b] : cands.ee) {
        const auto& ea = surface.edges[a];
        const auto& eb = surface.edges[b];
        double rate = 0;
        for (int i : ea) {
            for (int j : eb) {
                rate = std::max(rate, (ds[i] - ds[j]).norm());
            }
        }
        pairs.push_back({{ea[0], ea[1], eb[0], eb[1]}, false, rate});
    }
    std::erase_if(pairs, [](const MovingPair& p) { return p.rate == 0; });
    if (pairs.empty()) {
        return 1.0;
    }

    double d_min0 = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
        d_min0 = std::min(d_min0, pair_distance(p, s, ds, 0.0));
    }
    if (!(d_min0 > 0)) {
        throw GeometryError("ccd: current state is already in contact or intersecting");
    }
    const double floor = (1.0 - options.slack) * d_min0;

    double t = 0;
    for (int it = 0; it < options.max_advancements; ++it) {
        double step = std::numeric_limits<double>::infinity();
        for (const auto& p : pairs) {
            const double gap = pair_distance(p, s, ds, t) - floor;
            step = std::min(step, options.slack * std::max(gap, 0.0) / p.rate);
        }
        if (t + step >= 1.0) {
            return 1.0;
        }
        if (step <= 1e-12 * std::max(t, 1e-300)) {
            break;
        }
        t += step;
    }
    return t;
}

}  // namespace pdipc::ipc
