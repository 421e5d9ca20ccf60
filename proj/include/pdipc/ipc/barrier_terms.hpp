#pragma once

#include "pdipc/ipc/constraint_set.hpp"
#include "pdipc/mesh.hpp"

#include <vector>

namespace pdipc::ipc {

// Barrier energy, gradient and compressed Hessian pulled back to the free
// simulation DOFs through s = W x.
struct BarrierBlocks {
    double kappa = 0;
    double energy = 0;
    VecX gradient;              // free DOFs
    std::vector<int> affected;  // free-vertex indices touched by active pairs, ascending
    MatX hessian;               // dense 3 n_c x 3 n_c, rows ordered like `affected`

    int n_c() const { return static_cast<int>(affected.size()); }
    bool empty() const { return affected.empty(); }
    // out += B v on free-DOF vectors.
    void apply_add(const VecX& v, VecX& out) const;
};

// kappa * sum_k b(d_k) over the pairs of `set`.
double barrier_energy(const ConstraintSet& set, double kappa);

// Per-pair surface Hessians are projected to PSD (negative eigenvalues clamped)
// before the pullback. Throws ContractError for a non-positive pair distance.
BarrierBlocks barrier_terms(const TetMesh& mesh, const EmbeddedSurface& surface, const std::vector<Vec3>& s,
                            const ConstraintSet& set, double kappa);

// Symmetric matrix with negative eigenvalues clamped to zero.
Mat12 project_psd(const Mat12& m);

// kappa = scale * mu * mean(diag(H / mu)) * d0^2
double init_kappa(double mean_diagonal_H, double mu, double d0, double scale = 1e-3);

// Doubles kappa when the iterate's minimum distance falls below 1e-2 d0,
// never exceeding 1e6 times the initial value.
double adapt_kappa(double kappa, double kappa_init, double min_distance, double d0);

}  // namespace pdipc::ipc
