#include "pdipc/pd_core.hpp"

namespace pdipc {

namespace {

// sum_i mu w_i G_i^T (G_i x - p_i) over the full state; the G_i x term is skipped when x is null.
VecX full_force(const TetMesh& mesh, double mu, const std::vector<ElementProjection>& projections,
                const VecX* x)
{
    VecX out = VecX::Zero(3 * mesh.num_vertices());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vec9 r = -projections[e].p;
        if (x) {
            r += mesh.gradient_maps[e].apply(mesh.gather_element(e, *x));
        }
        const Vec12 local = mu * mesh.volumes[e] * mesh.gradient_maps[e].apply_transpose(r);
        for (int a = 0; a < 4; ++a) {
            out.segment<3>(3 * mesh.tets[e][a]) += local.segment<3>(3 * a);
        }
    }
    return out;
}

}  // namespace

double StiffnessSystem::mean_diagonal() const
{
    return H.rows() == 0 ? 0.0 : H.diagonal().mean();
}

StiffnessSystem assemble_H(const TetMesh& mesh, double mu)
{
    if (!(mu > 0)) {
        throw ContractError("stiffness multiplier must be positive");
    }
    const DofMap& dofs = mesh.dofs;
    std::vector<int> fixed_slot(mesh.num_vertices(), -1);
    for (std::size_t k = 0; k < mesh.fixed.size(); ++k) {
        fixed_slot[mesh.fixed[k]] = static_cast<int>(k);
    }

    std::vector<Triplet> free_trips, coupling_trips;
    free_trips.reserve(mesh.tets.size() * 48);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& B = mesh.gradient_maps[e].shape_gradients;
        const Eigen::Matrix4d K = mu * mesh.volumes[e] * B * B.transpose();
        const auto& t = mesh.tets[e];
        for (int a = 0; a < 4; ++a) {
            const int fa = dofs.free_index(t[a]);
            if (fa < 0) {
                continue;
            }
            for (int b = 0; b < 4; ++b) {
                const int fb = dofs.free_index(t[b]);
                for (int c = 0; c < 3; ++c) {
                    if (fb >= 0) {
                        free_trips.emplace_back(3 * fa + c, 3 * fb + c, K(a, b));
                    } else {
                        coupling_trips.emplace_back(3 * fa + c, 3 * fixed_slot[t[b]] + c, K(a, b));
                    }
                }
            }
        }
    }

    StiffnessSystem sys;
    sys.mesh = &mesh;
    sys.mu = mu;
    const int nf = dofs.num_free_dofs();
    const int nc = 3 * static_cast<int>(mesh.fixed.size());
    sys.H.resize(nf, nf);
    sys.H.setFromTriplets(free_trips.begin(), free_trips.end());
    sys.H.makeCompressed();
    sys.H_fixed.resize(nf, nc);
    sys.H_fixed.setFromTriplets(coupling_trips.begin(), coupling_trips.end());
    sys.fixed_values.resize(nc);
    for (std::size_t k = 0; k < mesh.fixed.size(); ++k) {
        sys.fixed_values.segment<3>(3 * k) = mesh.rest_positions[mesh.fixed[k]];
    }
    sys.factor.factorize(sys.H);
    return sys;
}

VecX pd_rhs(const StiffnessSystem& sys, const std::vector<ElementProjection>& projections)
{
    const VecX full = -full_force(*sys.mesh, sys.mu, projections, nullptr);
    VecX rhs = sys.mesh->dofs.gather(full);
    if (sys.H_fixed.cols() > 0) {
        rhs -= sys.H_fixed * sys.fixed_values;
    }
    return rhs;
}

VecX pd_gradient(const StiffnessSystem& sys, const VecX& x, const std::vector<ElementProjection>& projections)
{
    return sys.mesh->dofs.gather(full_force(*sys.mesh, sys.mu, projections, &x));
}

double pd_energy(const StiffnessSystem& sys, const VecX& x, const std::vector<ElementProjection>& projections)
{
    const TetMesh& mesh = *sys.mesh;
    double energy = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Vec9 r = mesh.gradient_maps[e].apply(mesh.gather_element(e, x)) - projections[e].p;
        energy += mesh.volumes[e] * r.squaredNorm();
    }
    return 0.5 * sys.mu * energy;
}

VecX solve_collision_free(const StiffnessSystem& sys, const VecX& rhs) { return sys.factor.solve(rhs); }

VecX assemble_state(const StiffnessSystem& sys, const VecX& free_values)
{
    const TetMesh& mesh = *sys.mesh;
    VecX x = mesh.rest_state();
    for (int k = 0; k < mesh.dofs.num_free_vertices(); ++k) {
        x.segment<3>(3 * mesh.dofs.free_vertices()[k]) = free_values.segment<3>(3 * k);
    }
    return x;
}

}  // namespace pdipc
