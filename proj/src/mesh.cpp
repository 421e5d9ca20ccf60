#include "pdipc/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace pdipc {

Vec9 GradientMap::apply(const Vec12& local) const
{
    // F = sum_a x_a * grad(N_a)^T
    Mat3 F = Mat3::Zero();
    for (int a = 0; a < 4; ++a) {
        F += local.segment<3>(3 * a) * shape_gradients.row(a);
    }
    return flatten(F);
}

Vec12 GradientMap::apply_transpose(const Vec9& flat) const
{
    const Mat3 M = unflatten(flat);
    Vec12 out;
    for (int a = 0; a < 4; ++a) {
        out.segment<3>(3 * a) = M * shape_gradients.row(a).transpose();
    }
    return out;
}

Eigen::Matrix<double, 9, 12> GradientMap::dense() const
{
    Eigen::Matrix<double, 9, 12> G = Eigen::Matrix<double, 9, 12>::Zero();
    for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < 3; ++c) {
            for (int r = 0; r < 3; ++r) {
                G(3 * c + r, 3 * a + r) = shape_gradients(a, c);
            }
        }
    }
    return G;
}

DofMap::DofMap(int num_vertices, const std::vector<int>& fixed) : free_index_(num_vertices, 0)
{
    for (int v : fixed) {
        free_index_[v] = -1;
    }
    for (int v = 0; v < num_vertices; ++v) {
        if (free_index_[v] == 0) {
            free_index_[v] = static_cast<int>(free_vertices_.size());
            free_vertices_.push_back(v);
        }
    }
}

VecX DofMap::gather(const VecX& full) const
{
    VecX out(num_free_dofs());
    for (int k = 0; k < num_free_vertices(); ++k) {
        out.segment<3>(3 * k) = full.segment<3>(3 * free_vertices_[k]);
    }
    return out;
}

void DofMap::scatter_add(const VecX& reduced, double scale, VecX& full) const
{
    for (int k = 0; k < num_free_vertices(); ++k) {
        full.segment<3>(3 * free_vertices_[k]) += scale * reduced.segment<3>(3 * k);
    }
}

VecX TetMesh::rest_state() const
{
    VecX x(3 * num_vertices());
    for (int v = 0; v < num_vertices(); ++v) {
        x.segment<3>(3 * v) = rest_positions[v];
    }
    return x;
}

Vec12 TetMesh::gather_element(int e, const VecX& x) const
{
    Vec12 local;
    for (int a = 0; a < 4; ++a) {
        local.segment<3>(3 * a) = x.segment<3>(3 * tets[e][a]);
    }
    return local;
}

Mat3 TetMesh::deformation_gradient(int e, const VecX& x) const
{
    return unflatten(gradient_maps[e].apply(gather_element(e, x)));
}

double TetMesh::bbox_diagonal() const
{
    Eigen::AlignedBox3d box;
    for (const auto& p : rest_positions) {
        box.extend(p);
    }
    return box.isEmpty() ? 0.0 : box.diagonal().norm();
}

TetMesh make_tet_mesh(std::vector<Vec3> positions, std::vector<std::array<int, 4>> tets,
                      std::vector<int> fixed)
{
    TetMesh mesh;
    mesh.rest_positions = std::move(positions);
    mesh.tets = std::move(tets);
    const int n = mesh.num_vertices();

    for (const auto& p : mesh.rest_positions) {
        if (!p.allFinite()) {
            throw GeometryError("non-finite vertex position");
        }
    }

    mesh.volumes.reserve(mesh.tets.size());
    mesh.gradient_maps.reserve(mesh.tets.size());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const auto& t = mesh.tets[e];
        for (int v : t) {
            if (v < 0 || v >= n) {
                throw GeometryError("tet " + std::to_string(e) + ": vertex index out of range");
            }
        }
        const Vec3& x0 = mesh.rest_positions[t[0]];
        Mat3 Dm;
        Dm.col(0) = mesh.rest_positions[t[1]] - x0;
        Dm.col(1) = mesh.rest_positions[t[2]] - x0;
        Dm.col(2) = mesh.rest_positions[t[3]] - x0;
        const double det = Dm.determinant();
        const double scale = Dm.colwise().norm().prod();
        if (!(det > 1e-14 * scale)) {
            throw GeometryError("tet " + std::to_string(e) +
                                (det < 0 ? ": inverted rest element" : ": degenerate rest element"));
        }
        mesh.volumes.push_back(det / 6.0);

        const Mat3 Dinv = Dm.inverse();
        GradientMap g;
        g.shape_gradients.bottomRows<3>() = Dinv;
        g.shape_gradients.row(0) = -Dinv.colwise().sum();
        mesh.gradient_maps.push_back(g);
    }

    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
    for (int v : fixed) {
        if (v < 0 || v >= n) {
            throw GeometryError("fixed vertex index out of range");
        }
    }
    mesh.fixed = std::move(fixed);
    mesh.dofs = DofMap(n, mesh.fixed);
    return mesh;
}

namespace {

// Reads "<keyword> <count>" and returns the count.
int read_header(std::istream& in, const std::string& keyword, bool optional = false)
{
    std::string word;
    if (!(in >> word)) {
        if (optional) {
            return -1;
        }
        throw ParseError("expected '" + keyword + "' section");
    }
    if (word != keyword) {
        throw ParseError("expected '" + keyword + "', found '" + word + "'");
    }
    long count = -1;
    if (!(in >> count) || count < 0) {
        throw ParseError("bad count after '" + keyword + "'");
    }
    return static_cast<int>(count);
}

}  // namespace

TetMesh parse_tet_mesh(std::istream& in)
{
    const int n = read_header(in, "verts");
    std::vector<Vec3> positions(n);
    for (int i = 0; i < n; ++i) {
        if (!(in >> positions[i].x() >> positions[i].y() >> positions[i].z())) {
            throw ParseError("truncated vertex list at vertex " + std::to_string(i));
        }
    }
    const int m = read_header(in, "tets");
    std::vector<std::array<int, 4>> tets(m);
    for (int e = 0; e < m; ++e) {
        for (int a = 0; a < 4; ++a) {
            long idx = 0;
            if (!(in >> idx)) {
                throw ParseError("truncated tet list at tet " + std::to_string(e));
            }
            if (idx < 0 || idx >= n) {
                throw GeometryError("tet " + std::to_string(e) + ": vertex index out of range");
            }
            tets[e][a] = static_cast<int>(idx);
        }
    }
    std::vector<int> fixed;
    const int k = read_header(in, "fixed", true);
    for (int i = 0; i < k; ++i) {
        long idx = 0;
        if (!(in >> idx)) {
            throw ParseError("truncated fixed list");
        }
        if (idx < 0 || idx >= n) {
            throw GeometryError("fixed vertex index out of range");
        }
        fixed.push_back(static_cast<int>(idx));
    }
    std::string trailing;
    if (in >> trailing) {
        throw ParseError("unexpected trailing token '" + trailing + "'");
    }
    return make_tet_mesh(std::move(positions), std::move(tets), std::move(fixed));
}

TetMesh load_tet_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open tet mesh '" + path.string() + "'");
    }
    return parse_tet_mesh(in);
}

void write_tet_mesh(const TetMesh& mesh, std::ostream& out)
{
    out << std::setprecision(17);
    out << "verts " << mesh.num_vertices() << '\n';
    for (const auto& p : mesh.rest_positions) {
        out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    out << "tets " << mesh.num_elements() << '\n';
    for (const auto& t : mesh.tets) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    }
    if (!mesh.fixed.empty()) {
        out << "fixed " << mesh.fixed.size() << '\n';
        for (int v : mesh.fixed) {
            out << v << '\n';
        }
    }
}

void save_tet_mesh(const TetMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write '" + path.string() + "'");
    }
    write_tet_mesh(mesh, out);
}

TriangleSoup parse_obj(std::istream& in)
{
    TriangleSoup soup;
    std::string line;
    int line_no = 0;
    std::vector<std::array<long, 3>> faces;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) {
                throw ParseError("obj line " + std::to_string(line_no) + ": bad vertex");
            }
            soup.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<long> ids;
            std::string tok;
            while (ls >> tok) {
                try {
                    ids.push_back(std::stol(tok.substr(0, tok.find('/'))));
                } catch (const std::exception&) {
                    throw ParseError("obj line " + std::to_string(line_no) + ": bad face index");
                }
            }
            if (ids.size() != 3) {
                throw ParseError("obj line " + std::to_string(line_no) + ": only triangles supported");
            }
            faces.push_back({ids[0], ids[1], ids[2]});
        }
        // Other records (vn, vt, o, g, s, ...) carry nothing we need.
    }
    const long nv = static_cast<long>(soup.vertices.size());
    for (const auto& f : faces) {
        std::array<int, 3> tri{};
        for (int k = 0; k < 3; ++k) {
            if (f[k] < 1 || f[k] > nv) {
                throw GeometryError("obj face index out of range");
            }
            tri[k] = static_cast<int>(f[k] - 1);
        }
        soup.triangles.push_back(tri);
    }
    return soup;
}

TriangleSoup load_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open obj '" + path.string() + "'");
    }
    return parse_obj(in);
}

void write_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles,
               std::ostream& out)
{
    out << std::setprecision(17);
    for (const auto& p : vertices) {
        out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    for (const auto& t : triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

void save_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles,
              const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write '" + path.string() + "'");
    }
    write_obj(vertices, triangles, out);
}

std::vector<Vec3> EmbeddedSurface::positions(const VecX& x) const
{
    std::vector<Vec3> s(embedding.size());
    for (std::size_t j = 0; j < embedding.size(); ++j) {
        const auto& row = embedding[j];
        Vec3 p = Vec3::Zero();
        for (int a = 0; a < 4; ++a) {
            p += row.weights[a] * x.segment<3>(3 * row.vertices[a]);
        }
        s[j] = p;
    }
    return s;
}

std::vector<Vec3> EmbeddedSurface::displacements(const VecX& dx) const { return positions(dx); }

std::vector<std::array<int, 2>> unique_edges(const std::vector<std::array<int, 3>>& triangles)
{
    std::vector<std::array<int, 2>> edges;
    edges.reserve(3 * triangles.size());
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k];
            int b = t[(k + 1) % 3];
            if (a > b) {
                std::swap(a, b);
            }
            edges.push_back({a, b});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

namespace {

// Uniform grid over tet bounding boxes for point location.
class TetLocator {
public:
    TetLocator(const TetMesh& mesh, double pad) : mesh_(mesh)
    {
        Eigen::AlignedBox3d all;
        double edge_sum = 0;
        for (const auto& t : mesh.tets) {
            edge_sum += (mesh.rest_positions[t[1]] - mesh.rest_positions[t[0]]).norm();
        }
        for (const auto& p : mesh.rest_positions) {
            all.extend(p);
        }
        origin_ = all.min();
        cell_ = std::max(edge_sum / std::max<std::size_t>(1, mesh.tets.size()), 1e-12);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            Eigen::AlignedBox3d box;
            for (int v : mesh.tets[e]) {
                box.extend(mesh.rest_positions[v]);
            }
            const auto lo = cell_coords(box.min().array() - pad);
            const auto hi = cell_coords(box.max().array() + pad);
            for (long i = lo[0]; i <= hi[0]; ++i) {
                for (long j = lo[1]; j <= hi[1]; ++j) {
                    for (long k = lo[2]; k <= hi[2]; ++k) {
                        cells_[key(i, j, k)].push_back(e);
                    }
                }
            }
        }
    }

    const std::vector<int>* candidates(const Vec3& p) const
    {
        const auto c = cell_coords(p.array());
        const auto it = cells_.find(key(c[0], c[1], c[2]));
        return it == cells_.end() ? nullptr : &it->second;
    }

private:
    std::array<long, 3> cell_coords(const Eigen::Array3d& p) const
    {
        const Eigen::Array3d r = (p - origin_.array()) / cell_;
        return {static_cast<long>(std::floor(r[0])), static_cast<long>(std::floor(r[1])),
                static_cast<long>(std::floor(r[2]))};
    }
    static long long key(long i, long j, long k)
    {
        return ((static_cast<long long>(i) + 1048576) << 42) |
               ((static_cast<long long>(j) + 1048576) << 21) | (static_cast<long long>(k) + 1048576);
    }

    const TetMesh& mesh_;
    Vec3 origin_;
    double cell_ = 1;
    std::unordered_map<long long, std::vector<int>> cells_;
};

Vec4 barycentric(const TetMesh& mesh, int e, const Vec3& p)
{
    const Vec3& x0 = mesh.rest_positions[mesh.tets[e][0]];
    Vec4 w = mesh.gradient_maps[e].shape_gradients * (p - x0);
    w[0] += 1.0;
    return w;
}

}  // namespace

EmbeddedSurface build_embedding(const TetMesh& mesh, const std::vector<Vec3>& surface_vertices,
                                const std::vector<std::array<int, 3>>& triangles)
{
    constexpr double kOutsideTolerance = 1e-9;
    constexpr double kInsideSlack = 1e-12;
    constexpr double kZeroWeight = 1e-12;

    const int ns = static_cast<int>(surface_vertices.size());
    for (const auto& t : triangles) {
        for (int v : t) {
            if (v < 0 || v >= ns) {
                throw GeometryError("surface triangle index out of range");
            }
        }
        const Vec3& a = surface_vertices[t[0]];
        const double area2 = (surface_vertices[t[1]] - a).cross(surface_vertices[t[2]] - a).norm();
        if (!(area2 > 0)) {
            throw GeometryError("degenerate surface triangle");
        }
    }

    EmbeddedSurface surf;
    surf.triangles = triangles;
    surf.edges = unique_edges(triangles);
    surf.embedding.resize(ns);

    const TetLocator locator(mesh, kOutsideTolerance);
    for (int j = 0; j < ns; ++j) {
        const Vec3& p = surface_vertices[j];
        int best = -1;
        double best_gap = std::numeric_limits<double>::infinity();
        Vec4 best_w = Vec4::Zero();
        if (const auto* cands = locator.candidates(p)) {
            // Candidates are sorted by tet index, so the first containing tet is the lowest.
            for (int e : *cands) {
                const Vec4 w = barycentric(mesh, e, p);
                if (w.minCoeff() >= -kInsideSlack) {
                    best = e;
                    best_w = w;
                    best_gap = 0;
                    break;
                }
                const Vec4 clamped = w.cwiseMax(0.0) / w.cwiseMax(0.0).sum();
                Vec3 q = Vec3::Zero();
                for (int a = 0; a < 4; ++a) {
                    q += clamped[a] * mesh.rest_positions[mesh.tets[e][a]];
                }
                const double gap = (q - p).norm();
                if (gap < best_gap) {
                    best_gap = gap;
                    best = e;
                    best_w = w;
                }
            }
        }
        if (best < 0 || best_gap > kOutsideTolerance) {
            throw GeometryError("surface vertex " + std::to_string(j) + " lies outside the tet mesh");
        }
        Vec4 w = best_w;
        for (int a = 0; a < 4; ++a) {
            if (w[a] < kZeroWeight) {
                w[a] = 0;
            }
        }
        w /= w.sum();
        auto& row = surf.embedding[j];
        row.tet = best;
        row.vertices = mesh.tets[best];
        row.weights = w;
    }

    std::vector<Triplet> trips;
    surf.is_collision_aware.assign(mesh.num_vertices(), 0);
    for (int j = 0; j < ns; ++j) {
        const auto& row = surf.embedding[j];
        for (int a = 0; a < 4; ++a) {
            if (row.weights[a] != 0) {
                trips.emplace_back(j, row.vertices[a], row.weights[a]);
                surf.is_collision_aware[row.vertices[a]] = 1;
            }
        }
    }
    surf.W.resize(ns, mesh.num_vertices());
    surf.W.setFromTriplets(trips.begin(), trips.end());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (surf.is_collision_aware[v]) {
            surf.collision_aware.push_back(v);
        }
    }
    surf.n2 = static_cast<int>(surf.collision_aware.size());
    surf.n1 = mesh.num_vertices() - surf.n2;
    return surf;
}

VertexPartition::VertexPartition(const DofMap& dofs, const std::vector<char>& is_collision_aware)
{
    const auto& free = dofs.free_vertices();
    for (int v : free) {
        if (!is_collision_aware[v]) {
            order_.push_back(v);
        }
    }
    n1_ = static_cast<int>(order_.size());
    for (int v : free) {
        if (is_collision_aware[v]) {
            order_.push_back(v);
        }
    }
    slot_.assign(free.size(), -1);
    dof_targets_.assign(3 * free.size(), -1);
    for (int k = 0; k < static_cast<int>(order_.size()); ++k) {
        const int f = dofs.free_index(order_[k]);
        slot_[f] = k;
        for (int c = 0; c < 3; ++c) {
            dof_targets_[3 * f + c] = 3 * k + c;
        }
    }
}

VecX VertexPartition::permute(const VecX& free_vector) const
{
    VecX out(free_vector.size());
    for (std::size_t i = 0; i < dof_targets_.size(); ++i) {
        out[dof_targets_[i]] = free_vector[static_cast<Eigen::Index>(i)];
    }
    return out;
}

VecX VertexPartition::unpermute(const VecX& permuted) const
{
    VecX out(permuted.size());
    for (std::size_t i = 0; i < dof_targets_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = permuted[dof_targets_[i]];
    }
    return out;
}

VertexPartition partition_permutation(const TetMesh& mesh, const EmbeddedSurface& surface)
{
    return VertexPartition(mesh.dofs, surface.is_collision_aware);
}

}  // namespace pdipc
