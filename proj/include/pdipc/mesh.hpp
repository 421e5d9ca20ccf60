#pragma once

#include "pdipc/common.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace pdipc {

// Linear map G taking the 12 stacked coordinates of a tet's vertices to its
// flattened (column-major) deformation gradient. Stored compactly as the 4x3
// matrix of shape-function gradients; G[3c + r, 3a + r] = shape_gradients(a, c).
struct GradientMap {
    Eigen::Matrix<double, 4, 3> shape_gradients;

    Vec9 apply(const Vec12& local) const;
    Vec12 apply_transpose(const Vec9& flat) const;
    Eigen::Matrix<double, 9, 12> dense() const;
};

inline Vec9 flatten(const Mat3& m) { return Eigen::Map<const Vec9>(m.data()); }
inline Mat3 unflatten(const Vec9& v) { return Eigen::Map<const Mat3>(v.data()); }

// Maps between the full 3n state and the reduced vector of free (non-fixed) DOFs.
class DofMap {
public:
    DofMap() = default;
    DofMap(int num_vertices, const std::vector<int>& fixed);

    int num_vertices() const { return static_cast<int>(free_index_.size()); }
    int num_free_vertices() const { return static_cast<int>(free_vertices_.size()); }
    int num_free_dofs() const { return 3 * num_free_vertices(); }

    // -1 for fixed vertices.
    int free_index(int vertex) const { return free_index_[vertex]; }
    bool is_fixed(int vertex) const { return free_index_[vertex] < 0; }
    const std::vector<int>& free_vertices() const { return free_vertices_; }

    VecX gather(const VecX& full) const;
    // Adds scale * reduced into the free entries of full.
    void scatter_add(const VecX& reduced, double scale, VecX& full) const;

private:
    std::vector<int> free_index_;
    std::vector<int> free_vertices_;
};

struct TetMesh {
    std::vector<Vec3> rest_positions;
    std::vector<std::array<int, 4>> tets;
    std::vector<double> volumes;
    std::vector<GradientMap> gradient_maps;
    // Sorted and unique. Fixed vertices stay at their rest positions.
    std::vector<int> fixed;
    DofMap dofs;

    int num_vertices() const { return static_cast<int>(rest_positions.size()); }
    int num_elements() const { return static_cast<int>(tets.size()); }

    VecX rest_state() const;
    Vec12 gather_element(int e, const VecX& x) const;
    Mat3 deformation_gradient(int e, const VecX& x) const;
    double bbox_diagonal() const;
};

// Validates connectivity, rejects inverted or degenerate rest elements and
// precomputes volumes and gradient maps.
TetMesh make_tet_mesh(std::vector<Vec3> positions, std::vector<std::array<int, 4>> tets,
                      std::vector<int> fixed);

// Text format:
//   verts <n>   followed by n lines "x y z"
//   tets <m>    followed by m lines of 4 zero-based indices
//   fixed <k>   (optional) followed by k indices
TetMesh parse_tet_mesh(std::istream& in);
TetMesh load_tet_mesh(const std::filesystem::path& path);
void write_tet_mesh(const TetMesh& mesh, std::ostream& out);
void save_tet_mesh(const TetMesh& mesh, const std::filesystem::path& path);

struct TriangleSoup {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

// Wavefront OBJ subset: "v x y z" and triangular "f i j k" (1-based; "i/t/n" accepted).
TriangleSoup parse_obj(std::istream& in);
TriangleSoup load_obj(const std::filesystem::path& path);
void write_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles,
               std::ostream& out);
void save_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles,
              const std::filesystem::path& path);

// One row of the interpolation matrix W: a surface vertex as a convex
// combination of the four vertices of its containing tet.
struct SurfaceVertexEmbedding {
    int tet = -1;
    std::array<int, 4> vertices{};
    Vec4 weights = Vec4::Zero();
};

struct EmbeddedSurface {
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;
    std::vector<SurfaceVertexEmbedding> embedding;
    // Scalar interpolation matrix (num_surface_vertices x n); s = W x per coordinate.
    SpMat W;
    // Simulation vertices with a nonzero column in W, sorted.
    std::vector<int> collision_aware;
    std::vector<char> is_collision_aware;
    int n1 = 0;
    int n2 = 0;

    int num_vertices() const { return static_cast<int>(embedding.size()); }
    std::vector<Vec3> positions(const VecX& x) const;
    // Surface displacement W * dx for a full-state displacement.
    std::vector<Vec3> displacements(const VecX& dx) const;
};

// Unique undirected edges of a triangle list, sorted lexicographically.
std::vector<std::array<int, 2>> unique_edges(const std::vector<std::array<int, 3>>& triangles);

EmbeddedSurface build_embedding(const TetMesh& mesh, const std::vector<Vec3>& surface_vertices,
                                const std::vector<std::array<int, 3>>& triangles);

// Ordering of the free vertices with collision-agnostic vertices first and
// collision-aware vertices second. Indices into the permuted system are
// block-major: DOF 3k + c of the permuted vector is coordinate c of vertex order[k].
class VertexPartition {
public:
    VertexPartition() = default;
    VertexPartition(const DofMap& dofs, const std::vector<char>& is_collision_aware);

    int n1() const { return n1_; }
    int n2() const { return static_cast<int>(order_.size()) - n1_; }
    int size() const { return static_cast<int>(order_.size()); }

    // Simulation vertex at permuted slot k.
    const std::vector<int>& order() const { return order_; }
    // Permuted slot of a free vertex, indexed by free index.
    int slot_of_free(int free_vertex) const { return slot_[free_vertex]; }

    // Free-DOF permutation P with (P v)[slot dof] = v[free dof].
    const std::vector<int>& dof_targets() const { return dof_targets_; }
    VecX permute(const VecX& free_vector) const;
    VecX unpermute(const VecX& permuted) const;

private:
    int n1_ = 0;
    std::vector<int> order_;
    std::vector<int> slot_;
    std::vector<int> dof_targets_;
};

VertexPartition partition_permutation(const TetMesh& mesh, const EmbeddedSurface& surface);

}  // namespace pdipc
