#pragma once

#include "pdipc/actuation.hpp"
#include "pdipc/mesh.hpp"
#include "pdipc/sparse_cholesky.hpp"

#include <vector>

namespace pdipc {

// Constant global-step system H = mu * sum_i w_i G_i^T G_i restricted to free DOFs,
// together with its prefactorization. Fixed DOFs are eliminated; their coupling
// block is kept so Dirichlet contributions can be moved to the right-hand side.
struct StiffnessSystem {
    const TetMesh* mesh = nullptr;
    double mu = 1.0;
    SpMat H;               // free x free
    SpMat H_fixed;         // free x fixed-DOF coupling
    VecX fixed_values;     // prescribed coordinates of the fixed DOFs
    SparseCholesky factor;

    int dofs() const { return static_cast<int>(H.rows()); }
    double mean_diagonal() const;
};

// Assembles and factors H once. The mesh must outlive the system.
// Throws NumericalError when H is singular (e.g. no fixed vertices).
StiffnessSystem assemble_H(const TetMesh& mesh, double mu = 1.0);

// sum_i mu w_i G_i^T p_i on the free DOFs minus the fixed-DOF coupling.
VecX pd_rhs(const StiffnessSystem& sys, const std::vector<ElementProjection>& projections);

// Elastic gradient sum_i mu w_i G_i^T (G_i x - p_i) on the free DOFs.
VecX pd_gradient(const StiffnessSystem& sys, const VecX& x, const std::vector<ElementProjection>& projections);

// Elastic energy (mu / 2) sum_i w_i ||G_i x - p_i||^2 for the given projections.
double pd_energy(const StiffnessSystem& sys, const VecX& x, const std::vector<ElementProjection>& projections);

// H^{-1} rhs through the cached factor.
VecX solve_collision_free(const StiffnessSystem& sys, const VecX& rhs);

// Full-state vector with the fixed DOFs at their prescribed values.
VecX assemble_state(const StiffnessSystem& sys, const VecX& free_values);

}  // namespace pdipc
