#include "pdipc/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace pdipc {

namespace {

constexpr double kBaseCell = 0.125;

struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double h = 0;
};

struct GridMesh {
    std::vector<Vec3> positions;
    std::vector<std::array<int, 4>> tets;
    std::vector<std::array<int, 3>> node_of;  // grid coordinates per compact vertex
};

// Six tets per active cell sharing the (0,0,0)-(1,1,1) diagonal; conforming across cells.
GridMesh build_grid_mesh(const Grid& g, const std::function<bool(int, int, int)>& active)
{
    GridMesh out;
    const auto node_key = [&](int i, int j, int k) { return (i * (g.ny + 1) + j) * (g.nz + 1) + k; };
    std::vector<int> compact((g.nx + 1) * (g.ny + 1) * (g.nz + 1), -1);
    const auto node = [&](int i, int j, int k) {
        int& id = compact[node_key(i, j, k)];
        if (id < 0) {
            id = static_cast<int>(out.positions.size());
            out.positions.emplace_back(i * g.h, j * g.h, k * g.h);
            out.node_of.push_back({i, j, k});
        }
        return id;
    };
    static constexpr std::array<std::array<int, 3>, 6> kAxisOrders = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            for (int k = 0; k < g.nz; ++k) {
                if (!active(i, j, k)) {
                    continue;
                }
                for (const auto& order : kAxisOrders) {
                    std::array<std::array<int, 3>, 4> corner{};
                    for (int s = 1; s < 4; ++s) {
                        corner[s] = corner[s - 1];
                        corner[s][order[s - 1]] = 1;
                    }
                    // Odd axis orders are negatively oriented.
                    const bool odd = order == std::array<int, 3>{0, 2, 1} || order == std::array<int, 3>{1, 0, 2} ||
                                     order == std::array<int, 3>{2, 1, 0};
                    if (odd) {
                        std::swap(corner[1], corner[2]);
                    }
                    std::array<int, 4> tet{};
                    for (int s = 0; s < 4; ++s) {
                        tet[s] = node(i + corner[s][0], j + corner[s][1], k + corner[s][2]);
                    }
                    out.tets.push_back(tet);
                }
            }
        }
    }
    return out;
}

// Sample coordinates along one axis over cells [c0, c1): `per_cell` samples per
// cell at fractional offsets (phase + m) / per_cell.
std::vector<double> axis_samples(int c0, int c1, double h, int per_cell, double phase)
{
    std::vector<double> out;
    for (int c = c0; c < c1; ++c) {
        for (int m = 0; m < per_cell; ++m) {
            out.push_back((c + (phase + m) / per_cell) * h);
        }
    }
    return out;
}

// Closed, outward-oriented box surface on the lattice of the given samples.
void add_box(const std::array<std::vector<double>, 3>& samples, std::vector<Vec3>& vertices,
             std::vector<std::array<int, 3>>& triangles)
{
    const std::array<int, 3> n = {static_cast<int>(samples[0].size()), static_cast<int>(samples[1].size()),
                                  static_cast<int>(samples[2].size())};
    std::map<std::array<int, 3>, int> ids;
    const auto vid = [&](const std::array<int, 3>& a) {
        const auto it = ids.find(a);
        if (it != ids.end()) {
            return it->second;
        }
        const int id = static_cast<int>(vertices.size());
        vertices.emplace_back(samples[0][a[0]], samples[1][a[1]], samples[2][a[2]]);
        ids.emplace(a, id);
        return id;
    };
    for (int d = 0; d < 3; ++d) {
        const int u = (d + 1) % 3;
        const int v = (d + 2) % 3;  // e_u x e_v = e_d
        for (int side = 0; side < 2; ++side) {
            for (int a = 0; a + 1 < n[u]; ++a) {
                for (int b = 0; b + 1 < n[v]; ++b) {
                    std::array<std::array<int, 3>, 4> q{};
                    const int uv[4][2] = {{a, b}, {a + 1, b}, {a + 1, b + 1}, {a, b + 1}};
                    for (int c = 0; c < 4; ++c) {
                        q[c][d] = side ? n[d] - 1 : 0;
                        q[c][u] = uv[c][0];
                        q[c][v] = uv[c][1];
                    }
                    std::array<int, 4> id{vid(q[0]), vid(q[1]), vid(q[2]), vid(q[3])};
                    if (side) {
                        triangles.push_back({id[0], id[1], id[2]});
                        triangles.push_back({id[0], id[2], id[3]});
                    } else {
                        triangles.push_back({id[0], id[2], id[1]});
                        triangles.push_back({id[0], id[3], id[2]});
                    }
                }
            }
        }
    }
}

// Distinct phases per axis keep every sample off the cell faces and off the
// diagonal planes separating the six tets of a cell.
constexpr std::array<double, 3> kPhase = {0.2, 0.5, 0.8};

std::array<std::vector<double>, 3> box_samples(const std::array<int, 3>& lo, const std::array<int, 3>& hi, double h,
                                               int per_cell)
{
    std::array<std::vector<double>, 3> s;
    for (int d = 0; d < 3; ++d) {
        s[d] = axis_samples(lo[d], hi[d], h, per_cell, kPhase[d]);
    }
    return s;
}

Vec3 centroid(const GridMesh& m, int e)
{
    Vec3 c = Vec3::Zero();
    for (int v : m.tets[e]) {
        c += m.positions[v];
    }
    return c / 4.0;
}

// Frame t reaches level ramp_start + (1 - ramp_start) (t + 1) / frames of the final target.
ActuationSequence ramped_actuation(const GridMesh& m, int frames, double ramp_start,
                                   const std::function<Mat3(const Vec3&, double)>& target)
{
    ActuationSequence seq;
    seq.num_elements = static_cast<int>(m.tets.size());
    for (int t = 0; t < frames; ++t) {
        const double level = ramp_start + (1.0 - ramp_start) * (t + 1.0) / frames;
        ActuationFrame frame;
        frame.matrices.reserve(seq.num_elements);
        for (int e = 0; e < seq.num_elements; ++e) {
            frame.matrices.push_back(target(centroid(m, e), level));
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

}  // namespace

std::string_view scene_kind_name(SceneKind kind)
{
    return kind == SceneKind::BarBend ? "bar_bend" : "slab_pinch";
}

SceneKind parse_scene_kind(std::string_view tag)
{
    if (tag == "bar_bend") {
        return SceneKind::BarBend;
    }
    if (tag == "slab_pinch") {
        return SceneKind::SlabPinch;
    }
    throw ParseError("unknown scene kind '" + std::string(tag) + "'");
}

GeneratedScene generate_scene(SceneKind kind, const SceneOptions& options)
{
    const int r = options.resolution;
    if (r < kMinResolution || r > kMaxResolution) {
        throw ContractError("scene resolution must be in [" + std::to_string(kMinResolution) + ", " +
                            std::to_string(kMaxResolution) + "]");
    }
    if (options.frames < 1) {
        throw ContractError("scene needs at least one frame");
    }
    const int per_cell = options.surface_samples > 0 ? options.surface_samples : std::max(1, 3 / r);

    GeneratedScene out;
    out.kind = kind;
    Grid g;
    g.h = kBaseCell / r;
    out.cell_size = g.h;
    out.d0 = 0.1 * g.h;
    // kappa_scale * mean(diag H) * d0^2 with mean(diag H) ~ mu h: scale by 1/d0^2
    // so the initial stiffness tracks the elastic stiffness, not d0^2.
    out.kappa_scale = 0.1 / (out.d0 * out.d0);

    GridMesh gm;
    std::vector<int> fixed;
    std::function<Mat3(const Vec3&, double)> target;
    if (kind == SceneKind::BarBend) {
        g.nx = 16 * r;
        g.ny = 2 * r;
        g.nz = 2 * r;
        gm = build_grid_mesh(g, [](int, int, int) { return true; });
        for (int v = 0; v < static_cast<int>(gm.positions.size()); ++v) {
            if (gm.node_of[v][0] == 8 * r) {
                fixed.push_back(v);
            }
        }
        add_box(box_samples({0, 0, 0}, {r, g.ny, g.nz}, g.h, per_cell), out.surface_vertices, out.triangles);
        add_box(box_samples({15 * r, 0, 0}, {16 * r, g.ny, g.nz}, g.h, per_cell), out.surface_vertices,
                out.triangles);
        // Plain PD needs a few hundred iterations per frame for this much bending.
        out.max_iters = 1000;
        // Contracting the top layer along the bar curls both halves upward.
        const double strain = options.strain.value_or(0.6);
        target = [strain](const Vec3& c, double level) {
            Mat3 A = Mat3::Identity();
            A(0, 0) = 1.0 + (c.z() > 0.125 ? -1.0 : 1.0) * level * strain;
            return A;
        };
    } else {
        g.nx = 16 * r;
        g.ny = 4 * r;
        g.nz = 5 * r;
        const int hinge = 4 * r;
        gm = build_grid_mesh(g, [&](int i, int, int k) { return i < hinge || k < 2 * r || k >= 3 * r; });
        for (int v = 0; v < static_cast<int>(gm.positions.size()); ++v) {
            if (gm.node_of[v][0] == 0) {
                fixed.push_back(v);
            }
        }
        // Staggered pads: the two tip boxes overlap across y only in a band of
        // 2 ov cells, which bounds the contact area.
        const int ov = std::max(1, r / 2);
        const int x0 = r > 1 ? 14 * r : 15;  // one cell deep at res 1 keeps n2 / n1 <= 0.15
        add_box(box_samples({x0, 0, 0}, {16 * r, 2 * r + ov, 2 * r}, g.h, per_cell), out.surface_vertices,
                out.triangles);
        add_box(box_samples({x0, 2 * r - ov, 3 * r}, {16 * r, g.ny, 5 * r}, g.h, per_cell),
                out.surface_vertices, out.triangles);
        // Both slabs swell across their thickness beyond the hinge, increasingly
        // towards the tips, so the slot closes as a wedge from the tip end.
        const double strain = options.strain.value_or(1.5);
        target = [strain](const Vec3& c, double level) {
            Mat3 A = Mat3::Identity();
            const double ramp = std::clamp((c.x() - 1.25) / 0.75, 0.0, 1.0);
            A(2, 2) = 1.0 + level * strain * ramp;
            return A;
        };
    }

    out.actuation = ramped_actuation(gm, options.frames, options.ramp_start, target);
    out.mesh = make_tet_mesh(std::move(gm.positions), std::move(gm.tets), std::move(fixed));

    const EmbeddedSurface surface = build_embedding(out.mesh, out.surface_vertices, out.triangles);
    if (!(surface.n2 < surface.n1)) {
        throw GeometryError("generated scene has n2 >= n1");
    }
    if (kind == SceneKind::SlabPinch && surface.n2 > 0.15 * surface.n1) {
        throw GeometryError("generated slab_pinch violates n2 / n1 <= 0.15");
    }
    return out;
}

SceneConfig write_scene(const GeneratedScene& scene, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    SceneConfig cfg;
    cfg.mesh = dir / "mesh.tet";
    cfg.surface = dir / "surface.obj";
    cfg.actuation = dir / "actuation.txt";
    cfg.output = dir / "out";
    cfg.d0 = scene.d0;
    cfg.kappa_scale = scene.kappa_scale;
    cfg.max_iters = scene.max_iters;
    save_tet_mesh(scene.mesh, cfg.mesh);
    save_obj(scene.surface_vertices, scene.triangles, cfg.surface);
    save_actuation(scene.actuation, cfg.actuation);
    save_scene_config(cfg, dir / "scene.json");
    return cfg;
}

}  // namespace pdipc
