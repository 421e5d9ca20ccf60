#include "pdipc/ipc/barrier_terms.hpp"

#include "pdipc/ipc/barrier.hpp"
#include "pdipc/ipc/distance.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace pdipc::ipc {

void BarrierBlocks::apply_add(const VecX& v, VecX& out) const
{
    const int nc = n_c();
    if (nc == 0) {
        return;
    }
    VecX local(3 * nc);
    for (int k = 0; k < nc; ++k) {
        local.segment<3>(3 * k) = v.segment<3>(3 * affected[k]);
    }
    const VecX y = hessian * local;
    for (int k = 0; k < nc; ++k) {
        out.segment<3>(3 * affected[k]) += y.segment<3>(3 * k);
    }
}

double barrier_energy(const ConstraintSet& set, double kappa)
{
    double e = 0;
    for (const auto& p : set.vt_pairs) {
        e += barrier(p.distance, set.d0);
    }
    for (const auto& p : set.ee_pairs) {
        e += barrier(p.distance, set.d0);
    }
    return kappa * e;
}

Mat12 project_psd(const Mat12& m)
{
    const Eigen::SelfAdjointEigenSolver<Mat12> eig(0.5 * (m + m.transpose()));
    const Vec12 lambda = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

struct PairStencil {
    std::array<int, 4> surface_vertices;
    bool vertex_triangle;
};

std::vector<PairStencil> pair_stencils(const EmbeddedSurface& surface, const ConstraintSet& set)
{
    std::vector<PairStencil> out;
    out.reserve(set.size());
    for (const auto& p : set.vt_pairs) {
        const auto& t = surface.triangles[p.triangle];
        out.push_back({{p.vertex, t[0], t[1], t[2]}, true});
    }
    for (const auto& p : set.ee_pairs) {
        const auto& a = surface.edges[p.edge_a];
        const auto& b = surface.edges[p.edge_b];
        out.push_back({{a[0], a[1], b[0], b[1]}, false});
    }
    return out;
}

}  // namespace

BarrierBlocks barrier_terms(const TetMesh& mesh, const EmbeddedSurface& surface, const std::vector<Vec3>& s,
                            const ConstraintSet& set, double kappa)
{
    const DofMap& dofs = mesh.dofs;
    BarrierBlocks out;
    out.kappa = kappa;
    out.gradient = VecX::Zero(dofs.num_free_dofs());
    const double d0 = set.d0;

    const auto stencils = pair_stencils(surface, set);

    std::vector<char> touched(dofs.num_free_vertices(), 0);
    for (const auto& st : stencils) {
        for (int j : st.surface_vertices) {
            const auto& row = surface.embedding[j];
            for (int a = 0; a < 4; ++a) {
                const int f = dofs.free_index(row.vertices[a]);
                if (row.weights[a] != 0 && f >= 0) {
                    touched[f] = 1;
                }
            }
        }
    }
    std::vector<int> position(dofs.num_free_vertices(), -1);
    for (int f = 0; f < dofs.num_free_vertices(); ++f) {
        if (touched[f]) {
            position[f] = static_cast<int>(out.affected.size());
            out.affected.push_back(f);
        }
    }
    const int nc = out.n_c();
    out.hessian = MatX::Zero(3 * nc, 3 * nc);

    for (const auto& st : stencils) {
        const auto& ids = st.surface_vertices;
        const DistanceDerivatives dd =
            st.vertex_triangle ? point_triangle_distance_derivatives(s[ids[0]], s[ids[1]], s[ids[2]], s[ids[3]])
                               : edge_edge_distance_derivatives(s[ids[0]], s[ids[1]], s[ids[2]], s[ids[3]]);
        const double d = dd.distance;
        if (!(d > 0)) {
            throw ContractError("non-positive distance in constraint set");
        }
        out.energy += kappa * barrier(d, d0);
        const double b1 = barrier_first_derivative(d, d0);
        const double b2 = barrier_second_derivative(d, d0);
        const Vec12 g = kappa * b1 * dd.gradient;
        const Mat12 h = project_psd(kappa * (b2 * dd.gradient * dd.gradient.transpose() + b1 * dd.hessian));

        // Pullback through W: local surface DOF (3j + c) -> sim vertex columns.
        struct Support {
            int local;   // index into the pair's compressed vertex list
            double weight;
        };
        std::array<std::array<Support, 4>, 4> support{};
        std::array<int, 16> verts{};
        int nverts = 0;
        for (int j = 0; j < 4; ++j) {
            const auto& row = surface.embedding[ids[j]];
            for (int a = 0; a < 4; ++a) {
                const int f = dofs.free_index(row.vertices[a]);
                if (row.weights[a] == 0 || f < 0) {
                    support[j][a] = {-1, 0.0};
                    continue;
                }
                int local = -1;
                for (int q = 0; q < nverts; ++q) {
                    if (verts[q] == f) {
                        local = q;
                        break;
                    }
                }
                if (local < 0) {
                    local = nverts;
                    verts[nverts++] = f;
                }
                support[j][a] = {local, row.weights[a]};
            }
        }
        MatX T = MatX::Zero(12, 3 * nverts);
        for (int j = 0; j < 4; ++j) {
            for (const auto& sp : support[j]) {
                if (sp.local < 0) {
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    T(3 * j + c, 3 * sp.local + c) += sp.weight;
                }
            }
        }
        const VecX g_sim = T.transpose() * g;
        const MatX h_sim = T.transpose() * h * T;
        for (int q = 0; q < nverts; ++q) {
            out.gradient.segment<3>(3 * verts[q]) += g_sim.segment<3>(3 * q);
            const int pq = position[verts[q]];
            for (int r = 0; r < nverts; ++r) {
                const int pr = position[verts[r]];
                out.hessian.block<3, 3>(3 * pq, 3 * pr) += h_sim.block<3, 3>(3 * q, 3 * r);
            }
        }
    }
    // project_psd is symmetric only up to rounding.
    out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
    return out;
}

double init_kappa(double mean_diagonal_H, double mu, double d0, double scale)
{
    return scale * mu * (mean_diagonal_H / mu) * d0 * d0;
}

double adapt_kappa(double kappa, double kappa_init, double min_distance, double d0)
{
    if (min_distance < 1e-2 * d0) {
        return std::min(2.0 * kappa, 1e6 * kappa_init);
    }
    return kappa;
}

}  // namespace pdipc::ipc
