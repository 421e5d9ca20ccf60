#include "support/oracles.hpp"

#include "pdipc/ipc/barrier.hpp"
#include "pdipc/ipc/barrier_terms.hpp"
#include "pdipc/ipc/ccd.hpp"
#include "pdipc/ipc/constraint_set.hpp"
#include "pdipc/ipc/distance.hpp"
#include "pdipc/ipc/intersection.hpp"
#include "pdipc/ipc/line_search.hpp"
#include "pdipc/pd_core.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace pdipc;
using namespace pdipc::ipc;

namespace {

Vec3 random_vec(std::mt19937& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> U(-scale, scale);
    return {U(rng), U(rng), U(rng)};
}

// Linear energy evaluator along a ray: f(x + a d) for a function of free DOFs.
std::vector<Vec3> shifted(const std::vector<Vec3>& s, const std::vector<Vec3>& ds, double a)
{
    std::vector<Vec3> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = s[i] + a * ds[i];
    }
    return out;
}

}  // namespace

TEST(Barrier, ValuesAndDerivativesAtBoundary)
{
    const double d0 = 0.3;
    EXPECT_EQ(barrier(d0, d0), 0.0);
    EXPECT_EQ(barrier_first_derivative(d0, d0), 0.0);
    EXPECT_EQ(barrier_second_derivative(d0, d0), 0.0);
    EXPECT_NEAR(barrier(d0 / 2, d0), d0 * d0 / 4 * std::log(2.0), 1e-15);
    EXPECT_GT(barrier(d0 * 1e-6, d0), 10 * barrier(d0 / 2, d0));
    double prev = 0;
    for (double d = d0 * 0.999; d > d0 * 1e-8; d *= 0.5) {
        const double b = barrier(d, d0);
        EXPECT_GT(b, prev);
        prev = b;
    }
    EXPECT_THROW(barrier(0.0, d0), ContractError);
    EXPECT_THROW(barrier_first_derivative(-1.0, d0), ContractError);
}

TEST(Barrier, DerivativesMatchFiniteDifferencesAcrossBoundary)
{
    const double d0 = 0.01;
    const double h = 1e-8;
    for (double r : {0.05, 0.3, 0.7, 0.99, 0.9999, 1.0001, 1.5, 3.0}) {
        const double d = r * d0;
        const double fd1 = (barrier(d + h, d0) - barrier(d - h, d0)) / (2 * h);
        const double fd2 = (barrier_first_derivative(d + h, d0) - barrier_first_derivative(d - h, d0)) / (2 * h);
        EXPECT_NEAR(barrier_first_derivative(d, d0), fd1, 1e-6 * std::max(1.0, std::abs(fd1)));
        EXPECT_NEAR(barrier_second_derivative(d, d0), fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
        if (r > 1) {
            EXPECT_EQ(barrier(d, d0), 0.0);
            EXPECT_EQ(barrier_first_derivative(d, d0), 0.0);
            EXPECT_EQ(barrier_second_derivative(d, d0), 0.0);
        }
    }
}

TEST(PointTriangle, FaceAndVertexRegions)
{
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    const Vec3 centroid = (a + b + c) / 3.0;
    const auto face = point_triangle_distance(centroid + Vec3(0, 0, 0.7), a, b, c);
    EXPECT_NEAR(face.distance, 0.7, 1e-15);
    EXPECT_EQ(face.region, PointTriangleRegion::Face);
    const auto corner = point_triangle_distance(Vec3(-1, -1, 0.5), a, b, c);
    EXPECT_NEAR(corner.distance, std::sqrt(2.25), 1e-15);
    EXPECT_EQ(corner.region, PointTriangleRegion::VertexA);
    const auto edge = point_triangle_distance(Vec3(0.5, -2, 0), a, b, c);
    EXPECT_NEAR(edge.distance, 2.0, 1e-15);
    EXPECT_EQ(edge.region, PointTriangleRegion::EdgeAB);
    EXPECT_THROW(point_triangle_distance(Vec3(0, 0, 1), a, b, 2 * b), GeometryError);
}

TEST(PointTriangle, MatchesSamplingOracle)
{
    std::mt19937 rng(21);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 a = random_vec(rng), b = random_vec(rng), c = random_vec(rng), p = random_vec(rng);
        if ((b - a).cross(c - a).norm() < 0.05) {
            continue;
        }
        const double ours = point_triangle_distance(p, a, b, c).distance;
        const double ref = oracle::sampled_point_triangle_distance(p, a, b, c, 1414);
        ASSERT_LE(ours, ref + 1e-12);
        ASSERT_LT(ref - ours, 1e-3);
    }
}

TEST(EdgeEdge, PerpendicularAndParallelCases)
{
    const auto perp = edge_edge_distance({-1, 0, 0}, {1, 0, 0}, {0, -1, 0.25}, {0, 1, 0.25});
    EXPECT_NEAR(perp.distance, 0.25, 1e-15);
    EXPECT_EQ(perp.region, EdgeEdgeRegion::Interior);
    const auto par = edge_edge_distance({0, 0, 0}, {1, 0, 0}, {2, 0.5, 0}, {3, 0.5, 0});
    EXPECT_NEAR(par.distance, std::sqrt(1.0 + 0.25), 1e-15);
    const auto overlap = edge_edge_distance({0, 0, 0}, {1, 0, 0}, {0.5, 0.3, 0}, {1.5, 0.3, 0});
    EXPECT_NEAR(overlap.distance, 0.3, 1e-15);
    EXPECT_THROW(edge_edge_distance({0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {1, 1, 0}), GeometryError);
}

TEST(EdgeEdge, MatchesSamplingOracle)
{
    std::mt19937 rng(22);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 p1 = random_vec(rng), p2 = random_vec(rng), q1 = random_vec(rng), q2 = random_vec(rng);
        const double ours = edge_edge_distance(p1, p2, q1, q2).distance;
        const double ref = oracle::sampled_edge_edge_distance(p1, p2, q1, q2, 1000);
        ASSERT_LE(ours, ref + 1e-12);
        ASSERT_LT(ref - ours, 1e-3);
    }
}

TEST(DistanceDerivatives, MatchFiniteDifferences)
{
    std::mt19937 rng(23);
    const double h = 1e-6;
    for (int k = 0; k < 200; ++k) {
        Vec12 x;
        for (int i = 0; i < 4; ++i) {
            x.segment<3>(3 * i) = random_vec(rng);
        }
        for (bool vt : {true, false}) {
            const auto eval = [&](const Vec12& y) {
                return vt ? point_triangle_distance_derivatives(y.segment<3>(0), y.segment<3>(3), y.segment<3>(6),
                                                                y.segment<3>(9))
                          : edge_edge_distance_derivatives(y.segment<3>(0), y.segment<3>(3), y.segment<3>(6),
                                                           y.segment<3>(9));
            };
            const DistanceDerivatives dd = eval(x);
            Vec12 g_fd;
            Mat12 h_fd;
            for (int i = 0; i < 12; ++i) {
                Vec12 xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const auto dp = eval(xp), dm = eval(xm);
                g_fd[i] = (dp.distance - dm.distance) / (2 * h);
                h_fd.col(i) = (dp.gradient - dm.gradient) / (2 * h);
            }
            EXPECT_LT((dd.gradient - g_fd).norm(), 1e-6 * std::max(1.0, g_fd.norm()));
            EXPECT_LT((dd.hessian - h_fd).norm(), 1e-3 * std::max(1.0, h_fd.norm()));
        }
    }
}

TEST(ConstraintSet, FarTrianglesGiveEmptySet)
{
    const auto f = oracle::parallel_strips(2, 0.2);
    const auto s = f.surface.positions(f.mesh.rest_state());
    EXPECT_TRUE(build_constraint_set(f.surface, s, 0.05).empty());
    EXPECT_TRUE(std::isinf(build_constraint_set(f.surface, s, 0.05).min_distance()));
}

TEST(ConstraintSet, ParallelStripsMatchBruteForce)
{
    const auto f = oracle::parallel_strips(4, 0.02);
    const auto s = f.surface.positions(f.mesh.rest_state());
    for (double d0 : {0.04, 0.1, 0.2, 0.5}) {
        const ConstraintSet set = build_constraint_set(f.surface, s, d0);
        const auto ref = oracle::brute_force_constraint_set(f.surface, s, d0);
        std::vector<oracle::PairKey> vt, ee;
        for (const auto& p : set.vt_pairs) {
            vt.push_back({p.vertex, p.triangle});
            EXPECT_LT(p.distance, d0);
            EXPECT_FALSE(vertex_in_triangle(p.vertex, f.surface.triangles[p.triangle]));
        }
        for (const auto& p : set.ee_pairs) {
            ee.push_back({p.edge_a, p.edge_b});
            EXPECT_LT(p.distance, d0);
            EXPECT_FALSE(edges_share_vertex(f.surface.edges[p.edge_a], f.surface.edges[p.edge_b]));
        }
        std::sort(vt.begin(), vt.end());
        std::sort(ee.begin(), ee.end());
        EXPECT_EQ(vt, ref.vt) << "d0 = " << d0;
        EXPECT_EQ(ee, ref.ee) << "d0 = " << d0;
    }
    EXPECT_FALSE(build_constraint_set(f.surface, s, 0.021).empty());
}

TEST(ConstraintSet, RandomSoupMatchesBruteForce)
{
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    const TetMesh m = oracle::box_mesh(2, 2, 2, 0.5);
    std::vector<Vec3> sv;
    std::vector<std::array<int, 3>> tris;
    for (int t = 0; t < 60; ++t) {
        const Vec3 base(U(rng), U(rng), U(rng));
        const int i = static_cast<int>(sv.size());
        for (int k = 0; k < 3; ++k) {
            Vec3 p = base + random_vec(rng, 0.05);
            sv.push_back(p.cwiseMax(0.01).cwiseMin(0.99));
        }
        tris.push_back({i, i + 1, i + 2});
    }
    const EmbeddedSurface surf = build_embedding(m, sv, tris);
    const auto s = surf.positions(m.rest_state());
    const ConstraintSet set = build_constraint_set(surf, s, 0.08);
    const auto ref = oracle::brute_force_constraint_set(surf, s, 0.08);
    EXPECT_EQ(set.vt_pairs.size(), ref.vt.size());
    EXPECT_EQ(set.ee_pairs.size(), ref.ee.size());
    const double ref_min = oracle::brute_force_min_distance(surf, s);
    if (ref_min < 0.08) {
        EXPECT_EQ(set.min_distance(), ref_min);
    } else {
        EXPECT_TRUE(std::isinf(set.min_distance()));
    }
}

TEST(ConstraintSet, AdjacentPrimitivesExcluded)
{
    // A folded pair of triangles sharing an edge with a tiny opening angle.
    const TetMesh m = oracle::unit_tet_mesh();
    const std::vector<Vec3> sv = {{0.1, 0.1, 0.1}, {0.5, 0.1, 0.1}, {0.1, 0.4, 0.1}, {0.1, 0.4, 0.1001}};
    const EmbeddedSurface surf = build_embedding(m, sv, {{0, 1, 2}, {0, 1, 3}});
    const auto s = surf.positions(m.rest_state());
    const ConstraintSet set = build_constraint_set(surf, s, 1.0);
    const auto ref = oracle::brute_force_constraint_set(surf, s, 1.0);
    EXPECT_EQ(set.vt_pairs.size(), ref.vt.size());
    EXPECT_EQ(set.ee_pairs.size(), ref.ee.size());
    // Only the two tips see the opposite triangle; the shared edge never pairs.
    ASSERT_EQ(set.vt_pairs.size(), 2u);
    for (const auto& p : set.vt_pairs) {
        EXPECT_FALSE(vertex_in_triangle(p.vertex, surf.triangles[p.triangle]));
    }
    for (const auto& p : set.ee_pairs) {
        EXPECT_FALSE(edges_share_vertex(surf.edges[p.edge_a], surf.edges[p.edge_b]));
    }
}

TEST(BarrierTerms, EmptySet)
{
    const auto f = oracle::parallel_strips(2, 0.2);
    const auto s = f.surface.positions(f.mesh.rest_state());
    const ConstraintSet set = build_constraint_set(f.surface, s, 0.05);
    const BarrierBlocks b = barrier_terms(f.mesh, f.surface, s, set, 10.0);
    EXPECT_EQ(b.energy, 0.0);
    EXPECT_EQ(b.n_c(), 0);
    EXPECT_EQ(b.gradient.norm(), 0.0);
}

TEST(BarrierTerms, GradientThroughWMatchesFiniteDifferences)
{
    const auto f = oracle::parallel_strips(2, 0.02);
    const double d0 = 0.05;
    const double kappa = 3.0;
    const VecX x0 = f.mesh.rest_state();
    const auto s0 = f.surface.positions(x0);
    const ConstraintSet set = build_constraint_set(f.surface, s0, d0);
    ASSERT_FALSE(set.empty());
    const BarrierBlocks b = barrier_terms(f.mesh, f.surface, s0, set, kappa);
    // Energy as a function of the free DOFs, with the pair list frozen.
    const auto energy = [&](const VecX& xf) {
        VecX x = x0;
        f.mesh.dofs.scatter_add(xf - f.mesh.dofs.gather(x0), 1.0, x);
        const auto s = f.surface.positions(x);
        double e = 0;
        for (const auto& p : set.vt_pairs) {
            const auto& t = f.surface.triangles[p.triangle];
            e += barrier(point_triangle_distance(s[p.vertex], s[t[0]], s[t[1]], s[t[2]]).distance, d0);
        }
        for (const auto& p : set.ee_pairs) {
            const auto& ea = f.surface.edges[p.edge_a];
            const auto& eb = f.surface.edges[p.edge_b];
            e += barrier(edge_edge_distance(s[ea[0]], s[ea[1]], s[eb[0]], s[eb[1]]).distance, d0);
        }
        return kappa * e;
    };
    const VecX fd = oracle::central_difference(energy, f.mesh.dofs.gather(x0), 1e-7);
    EXPECT_LT((b.gradient - fd).norm() / fd.norm(), 1e-4);
    EXPECT_NEAR(b.energy, barrier_energy(set, kappa), 1e-14 * std::abs(b.energy));

    // W^T (surface gradient) equals the pulled-back gradient.
    const int ns = f.surface.num_vertices();
    const auto surface_energy = [&](const VecX& sflat) {
        std::vector<Vec3> s(ns);
        for (int j = 0; j < ns; ++j) {
            s[j] = sflat.segment<3>(3 * j);
        }
        ConstraintSet frozen = set;
        double e = 0;
        for (const auto& p : frozen.vt_pairs) {
            const auto& t = f.surface.triangles[p.triangle];
            e += barrier(point_triangle_distance(s[p.vertex], s[t[0]], s[t[1]], s[t[2]]).distance, d0);
        }
        for (const auto& p : frozen.ee_pairs) {
            const auto& ea = f.surface.edges[p.edge_a];
            const auto& eb = f.surface.edges[p.edge_b];
            e += barrier(edge_edge_distance(s[ea[0]], s[ea[1]], s[eb[0]], s[eb[1]]).distance, d0);
        }
        return kappa * e;
    };
    VecX sflat(3 * ns);
    for (int j = 0; j < ns; ++j) {
        sflat.segment<3>(3 * j) = s0[j];
    }
    const VecX gs = oracle::central_difference(surface_energy, sflat, 1e-7);
    VecX pulled = VecX::Zero(3 * f.mesh.num_vertices());
    for (int k = 0; k < f.surface.W.outerSize(); ++k) {
        for (SpMat::InnerIterator it(f.surface.W, k); it; ++it) {
            pulled.segment<3>(3 * it.col()) += it.value() * gs.segment<3>(3 * it.row());
        }
    }
    EXPECT_LT((f.mesh.dofs.gather(pulled) - b.gradient).norm() / b.gradient.norm(), 1e-4);
}

TEST(BarrierTerms, HessianIsPsdAndAffectedSetExact)
{
    const auto f = oracle::parallel_strips(3, 0.01);
    const auto s = f.surface.positions(f.mesh.rest_state());
    const ConstraintSet set = build_constraint_set(f.surface, s, 0.03);
    ASSERT_FALSE(set.empty());
    const BarrierBlocks b = barrier_terms(f.mesh, f.surface, s, set, 100.0);
    EXPECT_LT((b.hessian - b.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-12 * b.hessian.norm());
    const Eigen::SelfAdjointEigenSolver<MatX> eig(b.hessian);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * b.hessian.norm());

    std::set<int> surface_verts;
    for (const auto& p : set.vt_pairs) {
        surface_verts.insert(p.vertex);
        for (int v : f.surface.triangles[p.triangle]) {
            surface_verts.insert(v);
        }
    }
    for (const auto& p : set.ee_pairs) {
        for (int e : {p.edge_a, p.edge_b}) {
            surface_verts.insert(f.surface.edges[e][0]);
            surface_verts.insert(f.surface.edges[e][1]);
        }
    }
    std::set<int> expected;
    for (int j : surface_verts) {
        const auto& row = f.surface.embedding[j];
        for (int a = 0; a < 4; ++a) {
            const int fi = f.mesh.dofs.free_index(row.vertices[a]);
            if (row.weights[a] != 0 && fi >= 0) {
                expected.insert(fi);
            }
        }
    }
    EXPECT_EQ(std::vector<int>(expected.begin(), expected.end()), b.affected);

    // Embedded vertices only: every affected vertex is collision-aware.
    for (int fi : b.affected) {
        EXPECT_TRUE(f.surface.is_collision_aware[f.mesh.dofs.free_vertices()[fi]]);
    }
}

TEST(BarrierTerms, SingleVertexTrianglePair)
{
    const TetMesh m = oracle::box_mesh(2, 2, 2, 0.5);
    const std::vector<Vec3> sv = {{0.3, 0.3, 0.5}, {0.7, 0.3, 0.5}, {0.3, 0.7, 0.5}, {0.41, 0.43, 0.51}};
    const EmbeddedSurface surf = build_embedding(m, sv, {{0, 1, 2}});
    const auto s = surf.positions(m.rest_state());
    const ConstraintSet set = build_constraint_set(surf, s, 0.02);
    ASSERT_EQ(set.vt_pairs.size(), 1u);
    EXPECT_TRUE(set.ee_pairs.empty());
    const BarrierBlocks b = barrier_terms(m, surf, s, set, 1.0);
    const Eigen::SelfAdjointEigenSolver<MatX> eig(b.hessian);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    const Mat12 indefinite = Mat12::Identity() - 2 * Vec12::Ones() * Vec12::Ones().transpose() / 12.0;
    const Eigen::SelfAdjointEigenSolver<Mat12> e2(project_psd(indefinite));
    EXPECT_GE(e2.eigenvalues().minCoeff(), -1e-14);
}

TEST(Kappa, InitAndAdaptRules)
{
    // mu enters through mean(diag(H)), which doubles with mu.
    EXPECT_NEAR(init_kappa(8.0, 2.0, 0.1), 2 * init_kappa(4.0, 1.0, 0.1), 1e-18);
    EXPECT_NEAR(init_kappa(4.0, 1.0, 0.1), 1e-3 * 4.0 * 0.01, 1e-18);
    const TetMesh m = oracle::box_mesh(2, 2, 2, 0.25);
    const double k1 = init_kappa(assemble_H(m, 1.0).mean_diagonal(), 1.0, 0.01);
    const double k2 = init_kappa(assemble_H(m, 2.0).mean_diagonal(), 2.0, 0.01);
    EXPECT_NEAR(k2, 2 * k1, 1e-12 * k1);

    double kappa = 1.0;
    for (double d : {0.5, 0.2, 0.011, 0.0101}) {
        kappa = adapt_kappa(kappa, 1.0, d, 1.0);
    }
    EXPECT_EQ(kappa, 1.0);
    kappa = adapt_kappa(kappa, 1.0, 0.009, 1.0);
    EXPECT_EQ(kappa, 2.0);
    for (int i = 0; i < 40; ++i) {
        kappa = adapt_kappa(kappa, 1.0, 1e-5, 1.0);
    }
    EXPECT_EQ(kappa, 1e6);
}

TEST(Ccd, NoMotionGivesFullStep)
{
    const auto f = oracle::parallel_strips(2, 0.05);
    const auto s = f.surface.positions(f.mesh.rest_state());
    EXPECT_EQ(ccd_max_step(f.surface, s, std::vector<Vec3>(s.size(), Vec3::Zero())), 1.0);
}

TEST(Ccd, HeadOnVertexIsBoundedBelowImpact)
{
    const TetMesh m = oracle::box_mesh(2, 2, 2, 0.5);
    const double g = 0.1;
    const std::vector<Vec3> sv = {{0.2, 0.2, 0.4}, {0.8, 0.2, 0.4}, {0.2, 0.8, 0.4}, {0.35, 0.35, 0.4 + g}};
    const EmbeddedSurface surf = build_embedding(m, sv, {{0, 1, 2}});
    const auto s = surf.positions(m.rest_state());
    std::vector<Vec3> ds(4, Vec3::Zero());
    ds[3] = Vec3(0, 0, -2 * g);
    const double a = ccd_max_step(surf, s, ds);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 0.5);
    const auto moved = shifted(s, ds, a);
    EXPECT_GT(point_triangle_distance(moved[3], moved[0], moved[1], moved[2]).distance, 0.0);
}

TEST(Ccd, RandomPerturbationsStayIntersectionFree)
{
    const auto f = oracle::parallel_strips(3, 0.01);
    const auto s = f.surface.positions(f.mesh.rest_state());
    std::mt19937 rng(41);
    for (int k = 0; k < 500; ++k) {
        std::vector<Vec3> ds(s.size());
        for (auto& d : ds) {
            d = random_vec(rng, 0.03);
        }
        const double a = ccd_max_step(f.surface, s, ds);
        ASSERT_GT(a, 0.0);
        ASSERT_LE(a, 1.0);
        const auto moved = shifted(s, ds, a);
        ASSERT_GT(oracle::brute_force_min_distance(f.surface, moved), 0.0) << "trial " << k;
        ASSERT_EQ(oracle::brute_force_crossings(f.surface.triangles, moved), 0) << "trial " << k;
    }
}

TEST(Ccd, TouchingStateRejected)
{
    const TetMesh m = oracle::box_mesh(2, 2, 2, 0.5);
    const std::vector<Vec3> sv = {{0.2, 0.2, 0.4}, {0.8, 0.2, 0.4}, {0.2, 0.8, 0.4}, {0.35, 0.35, 0.4}};
    const EmbeddedSurface surf = build_embedding(m, sv, {{0, 1, 2}});
    // Exact dyadic coordinates: vertex 3 lies in the triangle (W x would round it off the plane).
    const std::vector<Vec3> s = {{0.25, 0.25, 0.5}, {0.75, 0.25, 0.5}, {0.25, 0.75, 0.5}, {0.375, 0.375, 0.5}};
    std::vector<Vec3> ds(4, Vec3::Zero());
    ds[3] = Vec3(0, 0, 0.1);
    ASSERT_EQ(point_triangle_distance(s[3], s[0], s[1], s[2]).distance, 0.0);
    EXPECT_THROW(ccd_max_step(surf, s, ds), GeometryError);
}

TEST(LineSearch, ExactNewtonStepAcceptedFirstTry)
{
    // E(a) = (a - 1)^2 along a Newton direction from a = 0.
    const auto ls = backtracking_line_search([](double a) { return (a - 1) * (a - 1); }, 1.0, -2.0, 1.0);
    EXPECT_EQ(ls.alpha, 1.0);
    EXPECT_EQ(ls.halvings, 0);
}

TEST(LineSearch, OvershootIsHalved)
{
    const auto e = [](double a) { return (a - 0.1) * (a - 0.1); };
    const auto ls = backtracking_line_search(e, e(0), -0.2, 1.0);
    EXPECT_LT(ls.energy, e(0));
    EXPECT_EQ(ls.alpha, std::ldexp(1.0, -ls.halvings));
    EXPECT_EQ(ls.halvings, 3);
    const auto capped = backtracking_line_search(e, e(0), -0.2, 0.15);
    EXPECT_LE(capped.alpha, 0.15);
}

TEST(LineSearch, AscentAndStall)
{
    EXPECT_THROW(backtracking_line_search([](double a) { return a; }, 0.0, 1.0, 1.0), ContractError);
    EXPECT_THROW(backtracking_line_search([](double) { return 1.0; }, 1.0, -1.0, 1.0), LineSearchStall);
}

TEST(Intersection, CrossingAndSeparatedTriangles)
{
    const Vec3 a0(0, 0, 0), a1(1, 0, 0), a2(0, 1, 0);
    EXPECT_TRUE(triangles_intersect(a0, a1, a2, {0.2, 0.2, -0.5}, {0.2, 0.2, 0.5}, {0.6, 0.6, 0.5}));
    EXPECT_FALSE(triangles_intersect(a0, a1, a2, {0.2, 0.2, 0.1}, {0.2, 0.2, 0.5}, {0.6, 0.6, 0.5}));
    EXPECT_TRUE(segment_intersects_triangle({0.2, 0.2, -1}, {0.2, 0.2, 1}, a0, a1, a2));
    EXPECT_FALSE(segment_intersects_triangle({2, 2, -1}, {2, 2, 1}, a0, a1, a2));
}

TEST(Intersection, CountMatchesBruteForce)
{
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<Vec3> s;
    std::vector<std::array<int, 3>> tris;
    for (int t = 0; t < 150; ++t) {
        const Vec3 base(U(rng), U(rng), U(rng));
        const int i = static_cast<int>(s.size());
        for (int k = 0; k < 3; ++k) {
            s.push_back(base + random_vec(rng, 0.12));
        }
        tris.push_back({i, i + 1, i + 2});
    }
    const int ref = oracle::brute_force_crossings(tris, s);
    EXPECT_GT(ref, 0);
    EXPECT_EQ(count_intersecting_triangle_pairs(tris, s), ref);
}
