#include "pdipc/ipc/distance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace pdipc::ipc {

namespace {

// Closest-point difference r = sum_v c_v x_v with coefficients affine in the
// free parameters theta of the active region (0, 1 or 2 of them).
struct Stencil {
    Vec4 c = Vec4::Zero();
    int free_params = 0;
    std::array<Vec4, 2> dc{Vec4::Zero(), Vec4::Zero()};
};

// Squared distance f(x) = min_theta |r(x, theta)|^2 has gradient 2 c_v r and,
// with the active set held fixed, Hessian f_xx - f_xt f_tt^{-1} f_tx.
DistanceDerivatives from_stencil(const std::array<Vec3, 4>& x, const Stencil& st)
{
    Vec3 r = Vec3::Zero();
    for (int v = 0; v < 4; ++v) {
        r += st.c[v] * x[v];
    }
    const double f = r.squaredNorm();
    if (!(f > 0)) {
        throw ContractError("distance derivatives requested at zero distance");
    }

    Vec12 grad_f;
    Mat12 hess_f = Mat12::Zero();
    for (int v = 0; v < 4; ++v) {
        grad_f.segment<3>(3 * v) = 2.0 * st.c[v] * r;
        for (int u = 0; u < 4; ++u) {
            hess_f.block<3, 3>(3 * v, 3 * u) = 2.0 * st.c[v] * st.c[u] * Mat3::Identity();
        }
    }

    const int k = st.free_params;
    if (k > 0) {
        Eigen::Matrix<double, 3, Eigen::Dynamic> D(3, k);
        for (int j = 0; j < k; ++j) {
            Vec3 dj = Vec3::Zero();
            for (int v = 0; v < 4; ++v) {
                dj += st.dc[j][v] * x[v];
            }
            D.col(j) = dj;
        }
        const MatX f_tt = 2.0 * D.transpose() * D;
        Eigen::Matrix<double, 12, Eigen::Dynamic> f_xt(12, k);
        for (int j = 0; j < k; ++j) {
            for (int v = 0; v < 4; ++v) {
                f_xt.block<3, 1>(3 * v, j) = 2.0 * (st.dc[j][v] * r + st.c[v] * D.col(j));
            }
        }
        hess_f -= f_xt * f_tt.ldlt().solve(f_xt.transpose());
    }

    DistanceDerivatives out;
    const double d = std::sqrt(f);
    out.distance = d;
    out.gradient = grad_f / (2.0 * d);
    out.hessian = hess_f / (2.0 * d) - grad_f * grad_f.transpose() / (4.0 * d * d * d);
    return out;
}

void check_triangle(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    if (!(ab.cross(ac).norm() > 1e-14 * ab.norm() * ac.norm())) {
        throw GeometryError("degenerate triangle");
    }
}

Stencil point_triangle_stencil(const PointTriangleDistance& pt)
{
    Stencil st;
    const Vec3& w = pt.weights;
    st.c = Vec4(1.0, -w[0], -w[1], -w[2]);
    switch (pt.region) {
    case PointTriangleRegion::Face:
        st.free_params = 2;
        st.dc[0] = Vec4(0, 1, -1, 0);
        st.dc[1] = Vec4(0, 1, 0, -1);
        break;
    case PointTriangleRegion::EdgeAB:
        st.free_params = 1;
        st.dc[0] = Vec4(0, 1, -1, 0);
        break;
    case PointTriangleRegion::EdgeBC:
        st.free_params = 1;
        st.dc[0] = Vec4(0, 0, 1, -1);
        break;
    case PointTriangleRegion::EdgeCA:
        st.free_params = 1;
        st.dc[0] = Vec4(0, -1, 0, 1);
        break;
    default:
        break;
    }
    return st;
}

}  // namespace

PointTriangleDistance point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    check_triangle(a, b, c);
    PointTriangleDistance out;
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    auto finish = [&](PointTriangleRegion region, double wa, double wb, double wc) {
        out.region = region;
        out.weights = Vec3(wa, wb, wc);
        out.distance = (p - (wa * a + wb * b + wc * c)).norm();
        return out;
    };
    if (d1 <= 0 && d2 <= 0) {
        return finish(PointTriangleRegion::VertexA, 1, 0, 0);
    }
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) {
        return finish(PointTriangleRegion::VertexB, 0, 1, 0);
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double t = d1 / (d1 - d3);
        return finish(PointTriangleRegion::EdgeAB, 1 - t, t, 0);
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) {
        return finish(PointTriangleRegion::VertexC, 0, 0, 1);
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double t = d2 / (d2 - d6);
        return finish(PointTriangleRegion::EdgeCA, 1 - t, 0, t);
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish(PointTriangleRegion::EdgeBC, 0, 1 - t, t);
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return finish(PointTriangleRegion::Face, 1 - v - w, v, w);
}

EdgeEdgeDistance edge_edge_distance(const Vec3& p1, const Vec3& p2, const Vec3& q1, const Vec3& q2)
{
    const Vec3 d1 = p2 - p1;
    const Vec3 d2 = q2 - q1;
    const Vec3 r = p1 - q1;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    if (!(a > 0) || !(e > 0)) {
        throw GeometryError("zero-length segment");
    }
    const double f = d2.dot(r);
    const double c = d1.dot(r);
    const double b = d1.dot(d2);
    const double denom = a * e - b * b;

    double s = 0;
    if (denom > 1e-10 * a * e) {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
    }
    double t = (b * s + f) / e;
    if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
    } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
    }

    EdgeEdgeDistance out;
    out.s = s;
    out.t = t;
    out.distance = ((p1 + s * d1) - (q1 + t * d2)).norm();
    const bool s_free = s > 0 && s < 1;
    const bool t_free = t > 0 && t < 1;
    using R = EdgeEdgeRegion;
    if (s_free && t_free) {
        out.region = R::Interior;
    } else if (t_free) {
        out.region = s == 0 ? R::P1Edge : R::P2Edge;
    } else if (s_free) {
        out.region = t == 0 ? R::EdgeQ1 : R::EdgeQ2;
    } else if (s == 0) {
        out.region = t == 0 ? R::P1Q1 : R::P1Q2;
    } else {
        out.region = t == 0 ? R::P2Q1 : R::P2Q2;
    }
    return out;
}

DistanceDerivatives point_triangle_distance_derivatives(const Vec3& p, const Vec3& a, const Vec3& b,
                                                        const Vec3& c)
{
    const auto pt = point_triangle_distance(p, a, b, c);
    return from_stencil({p, a, b, c}, point_triangle_stencil(pt));
}

DistanceDerivatives edge_edge_distance_derivatives(const Vec3& p1, const Vec3& p2, const Vec3& q1,
                                                   const Vec3& q2)
{
    const auto ee = edge_edge_distance(p1, p2, q1, q2);
    Stencil st;
    st.c = Vec4(1 - ee.s, ee.s, -(1 - ee.t), -ee.t);
    const bool s_free = ee.s > 0 && ee.s < 1;
    const bool t_free = ee.t > 0 && ee.t < 1;
    if (s_free) {
        st.dc[st.free_params++] = Vec4(-1, 1, 0, 0);
    }
    if (t_free) {
        st.dc[st.free_params++] = Vec4(0, 0, 1, -1);
    }
    return from_stencil({p1, p2, q1, q2}, st);
}

}  // namespace pdipc::ipc
