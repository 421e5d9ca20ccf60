#pragma once

#include "pdipc/mesh.hpp"

#include <Eigen/Geometry>

#include <utility>
#include <vector>

namespace pdipc::ipc {

struct VertexTrianglePair {
    int vertex = -1;
    int triangle = -1;
    double distance = 0;
};

struct EdgeEdgePair {
    int edge_a = -1;  // edge_a < edge_b
    int edge_b = -1;
    double distance = 0;
};

// Active non-adjacent primitive pairs of the embedded surface with distance < d0.
struct ConstraintSet {
    std::vector<VertexTrianglePair> vt_pairs;
    std::vector<EdgeEdgePair> ee_pairs;
    double d0 = 0;

    bool empty() const { return vt_pairs.empty() && ee_pairs.empty(); }
    std::size_t size() const { return vt_pairs.size() + ee_pairs.size(); }
    // +inf when empty.
    double min_distance() const;
};

bool vertex_in_triangle(int v, const std::array<int, 3>& tri);
bool edges_share_vertex(const std::array<int, 2>& a, const std::array<int, 2>& b);

// Candidate primitive pairs from a uniform spatial hash over axis-aligned boxes.
// Only pairs whose boxes overlap are returned; callers inflate the boxes by the
// query radius (and by the motion for swept queries) so no pair within range is missed.
struct CandidatePairs {
    std::vector<std::pair<int, int>> vt;  // (vertex, triangle)
    std::vector<std::pair<int, int>> ee;  // (edge_a < edge_b)
};

// Boxes span the primitives at positions s and s + ds (ds may be empty), inflated by margin.
CandidatePairs find_candidates(const EmbeddedSurface& surface, const std::vector<Vec3>& s,
                               const std::vector<Vec3>& ds, double margin);

ConstraintSet build_constraint_set(const EmbeddedSurface& surface, const std::vector<Vec3>& s, double d0);

// Smallest non-adjacent pair distance among pairs closer than radius; +inf if none.
double minimum_distance(const EmbeddedSurface& surface, const std::vector<Vec3>& s, double radius);

}  // namespace pdipc::ipc
