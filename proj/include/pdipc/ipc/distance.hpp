#pragma once

#include "pdipc/common.hpp"

namespace pdipc::ipc {

enum class PointTriangleRegion { Face, EdgeAB, EdgeBC, EdgeCA, VertexA, VertexB, VertexC };

// Which segment parameters are clamped at the closest points: s on (p1, p2), t on (q1, q2).
enum class EdgeEdgeRegion {
    Interior,  // both free
    P1Edge,    // s = 0, t free
    P2Edge,    // s = 1, t free
    EdgeQ1,    // s free, t = 0
    EdgeQ2,    // s free, t = 1
    P1Q1,
    P1Q2,
    P2Q1,
    P2Q2,
};

struct PointTriangleDistance {
    double distance = 0;
    PointTriangleRegion region = PointTriangleRegion::Face;
    Vec3 weights = Vec3::Zero();  // closest point = weights . (a, b, c)
};

struct EdgeEdgeDistance {
    double distance = 0;
    EdgeEdgeRegion region = EdgeEdgeRegion::Interior;
    double s = 0;
    double t = 0;
};

// Unsigned distance from p to the closed triangle abc. Throws GeometryError for degenerate triangles.
PointTriangleDistance point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Unsigned distance between closed segments. Parallel segments fall back to
// clamped endpoint projection. Throws GeometryError for zero-length segments.
EdgeEdgeDistance edge_edge_distance(const Vec3& p1, const Vec3& p2, const Vec3& q1, const Vec3& q2);

// Distance with gradient and Hessian with respect to the 12 stacked
// coordinates (p, a, b, c) or (p1, p2, q1, q2). Requires distance > 0.
struct DistanceDerivatives {
    double distance = 0;
    Vec12 gradient = Vec12::Zero();
    Mat12 hessian = Mat12::Zero();
};

DistanceDerivatives point_triangle_distance_derivatives(const Vec3& p, const Vec3& a, const Vec3& b,
                                                        const Vec3& c);
DistanceDerivatives edge_edge_distance_derivatives(const Vec3& p1, const Vec3& p2, const Vec3& q1,
                                                   const Vec3& q2);

}  // namespace pdipc::ipc
