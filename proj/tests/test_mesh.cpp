#include "support/oracles.hpp"

#include "pdipc/mesh.hpp"
#include "pdipc/pd_core.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace pdipc;

TEST(TetMesh, UnitTetVolumeAndIdentityGradient)
{
    const TetMesh m = oracle::unit_tet_mesh();
    ASSERT_EQ(m.num_vertices(), 4);
    ASSERT_EQ(m.num_elements(), 1);
    EXPECT_NEAR(m.volumes[0], 1.0 / 6.0, 1e-15);
    const Vec9 F = m.gradient_maps[0].apply(m.gather_element(0, m.rest_state()));
    EXPECT_LT((F - flatten(Mat3::Identity())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TetMesh, GradientMapMatchesDenseOracle)
{
    const TetMesh m = oracle::box_mesh(2, 2, 1, 0.3);
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.tets[e];
        const auto& x = m.rest_positions;
        const auto G = oracle::dense_gradient_map(x[t[0]], x[t[1]], x[t[2]], x[t[3]]);
        EXPECT_LT((m.gradient_maps[e].dense() - G).cwiseAbs().maxCoeff(), 1e-12);
        Vec12 v = Vec12::Random();
        Vec9 f = Vec9::Random();
        EXPECT_LT((m.gradient_maps[e].apply(v) - G * v).norm(), 1e-12);
        EXPECT_LT((m.gradient_maps[e].apply_transpose(f) - G.transpose() * f).norm(), 1e-12);
    }
}

TEST(TetMesh, VolumesMatchIndependentSignedSum)
{
    const TetMesh m = oracle::box_mesh(3, 2, 2, 0.2);
    double sum = 0;
    for (double w : m.volumes) {
        EXPECT_GT(w, 0);
        sum += w;
    }
    const double ref = oracle::signed_volume_sum(m.rest_positions, m.tets);
    EXPECT_LT(std::abs(sum - ref) / ref, 1e-12);
    EXPECT_NEAR(sum, 3 * 2 * 2 * 0.008, 1e-12);
}

TEST(TetMesh, RejectsInvertedAndOutOfRange)
{
    std::vector<Vec3> x = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    EXPECT_THROW(make_tet_mesh(x, {{0, 2, 1, 3}}, {0}), GeometryError);
    EXPECT_THROW(make_tet_mesh(x, {{0, 1, 2, 4}}, {0}), GeometryError);
    EXPECT_THROW(make_tet_mesh(x, {{0, 1, 2, 2}}, {0}), GeometryError);
}

TEST(TetMeshFile, ParsesAndRoundTrips)
{
    std::istringstream in("verts 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ntets 1\n0 1 2 3\nfixed 1\n0\n");
    const TetMesh m = parse_tet_mesh(in);
    EXPECT_EQ(m.fixed, std::vector<int>{0});
    std::ostringstream out;
    write_tet_mesh(m, out);
    std::istringstream back(out.str());
    const TetMesh m2 = parse_tet_mesh(back);
    ASSERT_EQ(m2.num_vertices(), 4);
    for (int v = 0; v < 4; ++v) {
        EXPECT_EQ(m2.rest_positions[v], m.rest_positions[v]);
    }
    EXPECT_EQ(m2.tets, m.tets);
    EXPECT_EQ(m2.fixed, m.fixed);
}

TEST(TetMeshFile, IndexOutOfRange)
{
    std::istringstream in("verts 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ntets 1\n0 1 2 4\n");
    try {
        parse_tet_mesh(in);
        FAIL() << "expected an error";
    } catch (const GeometryError& e) {
        EXPECT_NE(std::string(e.what()).find("index out of range"), std::string::npos);
    }
}

TEST(TetMeshFile, MalformedInput)
{
    std::istringstream truncated("verts 4\n0 0 0\n1 0 0\n");
    EXPECT_THROW(parse_tet_mesh(truncated), ParseError);
    std::istringstream bad_keyword("vertices 1\n0 0 0\n");
    EXPECT_THROW(parse_tet_mesh(bad_keyword), ParseError);
    EXPECT_THROW(load_tet_mesh("/nonexistent/mesh.tet"), ParseError);
}

TEST(Obj, ParsesSlashIndicesAndRejectsQuads)
{
    std::istringstream in("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n");
    const TriangleSoup s = parse_obj(in);
    ASSERT_EQ(s.triangles.size(), 1u);
    EXPECT_EQ(s.triangles[0], (std::array<int, 3>{0, 1, 2}));
    std::istringstream quad("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n");
    EXPECT_THROW(parse_obj(quad), ParseError);
    std::istringstream range("v 0 0 0\nf 1 2 3\n");
    EXPECT_THROW(parse_obj(range), GeometryError);
}

TEST(Embedding, CornerAndCentroidRows)
{
    const TetMesh m = oracle::unit_tet_mesh();
    const Vec3 centroid = Vec3::Constant(0.25);
    const std::vector<Vec3> sv = {{1, 0, 0}, centroid, {0.1, 0.1, 0.1}};
    const EmbeddedSurface s = build_embedding(m, sv, {{0, 1, 2}});
    EXPECT_EQ(s.embedding[0].weights, Vec4(0, 1, 0, 0));
    EXPECT_LT((s.embedding[1].weights - Vec4::Constant(0.25)).norm(), 1e-15);
}

TEST(Embedding, RandomInteriorPointsReproduced)
{
    const TetMesh m = oracle::box_mesh(3, 3, 3, 0.1);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.001, 0.299);
    std::vector<Vec3> sv;
    for (int i = 0; i < 300; ++i) {
        sv.emplace_back(U(rng), U(rng), U(rng));
    }
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i + 2 < 300; i += 3) {
        tris.push_back({i, i + 1, i + 2});
    }
    const EmbeddedSurface s = build_embedding(m, sv, tris);
    const VecX x = m.rest_state();
    const auto rep = s.positions(x);
    for (int j = 0; j < 300; ++j) {
        EXPECT_LT((rep[j] - sv[j]).norm(), 1e-9);
        const auto& row = s.embedding[j];
        const auto& t = m.tets[row.tet];
        const Vec4 w = oracle::barycentric(m.rest_positions[t[0]], m.rest_positions[t[1]], m.rest_positions[t[2]],
                                           m.rest_positions[t[3]], sv[j]);
        EXPECT_LT((w - row.weights).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_NEAR(row.weights.sum(), 1.0, 1e-12);
        EXPECT_GE(row.weights.minCoeff(), 0.0);
        EXPECT_LE(row.weights.maxCoeff(), 1.0);
    }
}

TEST(Embedding, WColumnsDefineCollisionAwareSet)
{
    const auto f = oracle::parallel_strips(3, 0.01);
    const EmbeddedSurface& s = f.surface;
    std::vector<char> touched(f.mesh.num_vertices(), 0);
    for (int k = 0; k < s.W.outerSize(); ++k) {
        for (SpMat::InnerIterator it(s.W, k); it; ++it) {
            if (it.value() != 0) {
                touched[it.col()] = 1;
            }
        }
    }
    EXPECT_EQ(touched, s.is_collision_aware);
    EXPECT_EQ(s.n1 + s.n2, f.mesh.num_vertices());
    EXPECT_EQ(static_cast<int>(s.collision_aware.size()), s.n2);
}

TEST(Embedding, OutsidePointRejected)
{
    const TetMesh m = oracle::unit_tet_mesh();
    EXPECT_THROW(build_embedding(m, {{0.1, 0.1, 0.1}, {0.2, 0.1, 0.1}, {1, 1, 1}}, {{0, 1, 2}}), GeometryError);
    EXPECT_THROW(build_embedding(m, {{0.1, 0.1, 0.1}, {0.2, 0.1, 0.1}, {0.3, 0.1, 0.1}}, {{0, 1, 2}}),
                 GeometryError);  // collinear, zero area
}

TEST(Embedding, SharedFaceTieGoesToLowestTet)
{
    const TetMesh m = oracle::two_tet_mesh();
    // Centroid of the shared face (1, 2, 3).
    const Vec3 p = (m.rest_positions[1] + m.rest_positions[2] + m.rest_positions[3]) / 3.0;
    const EmbeddedSurface s = build_embedding(m, {p, {0.1, 0.1, 0.1}, {0.1, 0.2, 0.1}}, {{0, 1, 2}});
    EXPECT_EQ(s.embedding[0].tet, 0);
}

TEST(Partition, BijectionAndOrdering)
{
    const auto f = oracle::parallel_strips(3, 0.01);
    const VertexPartition P = partition_permutation(f.mesh, f.surface);
    const DofMap& dofs = f.mesh.dofs;
    EXPECT_EQ(P.size(), dofs.num_free_vertices());
    for (int k = 0; k < P.size(); ++k) {
        EXPECT_EQ(f.surface.is_collision_aware[P.order()[k]] != 0, k >= P.n1());
    }
    std::vector<int> seen(P.size(), 0);
    for (int f_idx = 0; f_idx < P.size(); ++f_idx) {
        ++seen[P.slot_of_free(f_idx)];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    const VecX v = VecX::Random(dofs.num_free_dofs());
    EXPECT_EQ(P.unpermute(P.permute(v)), v);
    EXPECT_EQ(P.permute(P.unpermute(v)), v);
}

TEST(Partition, AllCollisionAwareGivesEmptyH11)
{
    const TetMesh m = oracle::unit_tet_mesh();
    const std::vector<Vec3> sv = {{0.2, 0.2, 0.2}, {0.7, 0.1, 0.1}, {0.1, 0.7, 0.1}, {0.1, 0.1, 0.7}};
    const EmbeddedSurface s = build_embedding(m, sv, {{0, 1, 2}, {0, 2, 3}});
    const VertexPartition P = partition_permutation(m, s);
    EXPECT_EQ(P.n1(), 0);
    EXPECT_EQ(P.n2(), 3);
}

TEST(Partition, TwoTetBlockStructure)
{
    // Only the second tet carries surface, so vertex 0 is collision-agnostic
    // and couples to the others only through the shared face.
    const TetMesh m = oracle::two_tet_mesh({4});
    const std::vector<Vec3> sv = {{0.7, 0.6, 0.6}, {0.6, 0.7, 0.6}, {0.6, 0.6, 0.7}};
    const EmbeddedSurface s = build_embedding(m, sv, {{0, 1, 2}});
    for (const auto& row : s.embedding) {
        EXPECT_EQ(row.tet, 1);
    }
    const VertexPartition P = partition_permutation(m, s);
    ASSERT_EQ(P.n1(), 1);
    ASSERT_EQ(P.n2(), 3);
    const MatX H = oracle::restrict_free(m, oracle::dense_full_H(m, 1.0));
    MatX PH(H.rows(), H.cols());
    for (int i = 0; i < H.rows(); ++i) {
        for (int j = 0; j < H.cols(); ++j) {
            PH(P.dof_targets()[i], P.dof_targets()[j]) = H(i, j);
        }
    }
    const MatX H12 = PH.topRightCorner(3, 9);
    // Vertex 0 shares tet 0 with 1, 2, 3, so every coupling block is nonzero.
    for (int b = 0; b < 3; ++b) {
        EXPECT_GT(H12.middleCols(3 * b, 3).norm(), 0);
    }
    EXPECT_EQ(P.order()[0], 0);
}
