#pragma once

#include "pdipc/ipc/barrier_terms.hpp"
#include "pdipc/mesh.hpp"
#include "pdipc/pd_core.hpp"
#include "pdipc/sparse_cholesky.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <string>
#include <string_view>

namespace pdipc {

// Global-step backends. None is plain PD: no barrier, no CCD, no line search.
enum class Backend { None, Dense, CG, Schur, Woodbury };

std::string_view backend_name(Backend b);
// Throws ParseError for unknown tags.
Backend parse_backend(std::string_view tag);

struct SolveStats {
    Backend backend = Backend::None;
    double wall_ms = 0;
    double residual = 0;
    int n_c = 0;
    int cg_iterations = 0;
    bool converged = true;  // false when CG hit max_iter
    int update_rank = 0;    // 3 n_c for the Woodbury update
    double regularization = 0;
};

struct GlobalStepResult {
    VecX delta_x;  // free DOFs
    double residual = 0;
    SolveStats stats;
};

// || (H + B) dx + g || / || g ||  (0 when g and dx vanish).
double system_residual(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier, const VecX& g,
                       const VecX& dx);

// Dense H + B scattered over the free DOFs.
MatX dense_system(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier);

inline constexpr int kDenseReferenceMaxDofs = 5000;

// Solves (H + B) dx = -g by dense Cholesky. Throws ContractError above the
// dense guard and NumericalError when the system is not SPD.
GlobalStepResult solve_dense_reference(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier,
                                       const VecX& g);

struct CgOptions {
    double tol = 1e-8;  // relative, on the preconditioned residual
    int max_iter = 0;   // 0 selects 10 sqrt(DOFs)
};

// Conjugate gradient on Lt^{-1} (H + B) Lt^{-T} y = -Lt^{-1} g with the cached
// factor H = Lt Lt^T, returning dx = Lt^{-T} y. H + B is never formed.
GlobalStepResult solve_cg(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier, const VecX& g,
                          const CgOptions& options = {});

// Block elimination of H permuted as [agnostic | collision-aware]:
//   P H P^T = [H11 H12; H21 H22],  Sigma = H22 - H21 H11^{-1} H12.
// Immutable after build_schur.
struct SchurWorkspace {
    const StiffnessSystem* sys = nullptr;
    VertexPartition partition;
    SparseCholesky L1;  // H11 = L1t L1t^T
    SpMat H11, H12, H21, H22;
    MatX sigma;
    MatX sigma_inv;
    double build_ms = 0;

    int n1_dofs() const { return 3 * partition.n1(); }
    int n2_dofs() const { return 3 * partition.n2(); }
    bool degenerate() const { return partition.n2() == 0; }
};

// Throws NumericalError if H11 or Sigma cannot be factored.
SchurWorkspace build_schur(const StiffnessSystem& sys, const VertexPartition& partition);

// B scattered into the 3 n2 collision-aware block of the permuted system.
// Throws ContractError if the barrier touches a collision-agnostic vertex.
MatX barrier_block22(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier);

// Dense factors of the block elimination: P (H + B) P^T = lower * middle * lower^T
// with middle = diag(I, Sigma + B22). Small systems only.
struct SchurFactors {
    MatX lower;
    MatX middle;
    MatX upper;
    MatX permuted_system;  // P (H + B) P^T formed directly
};
SchurFactors schur_factors(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier);

// Staged solve: lower triangular, block diagonal (dense Cholesky of Sigma + B22
// per call), upper triangular.
GlobalStepResult solve_schur(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier, const VecX& g);

// Applies (Sigma + Q^T Bc Q)^{-1} from the precomputed Sigma^{-1} and two dense
// inversions of size 3 n_c (Bc and the inner capacitance matrix).
// Bc is regularized by eps I, eps = 1e-8 trace(Bc) / 3 n_c, only when its
// Cholesky fails or is poorly conditioned.
class WoodburyInverse {
public:
    WoodburyInverse(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier);

    // v has the size of the collision-aware block.
    VecX apply(const VecX& v) const;
    double regularization() const { return regularization_; }
    int rank() const { return static_cast<int>(selected_.size()); }

private:
    const SchurWorkspace* ws_;
    std::vector<int> selected_;  // rows of the collision-aware block touched by B
    MatX sigma_inv_cols_;        // Sigma^{-1}[:, selected]
    Eigen::LLT<MatX> inner_;     // Bc^{-1} + Sigma^{-1}[selected, selected]
    double regularization_ = 0;
};

GlobalStepResult solve_woodbury(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier, const VecX& g);

// Backend dispatch for the driver. The Schur workspace is built on first use
// and shared between the Schur and Woodbury backends.
class GlobalSolver {
public:
    GlobalSolver(const StiffnessSystem& sys, const VertexPartition& partition, Backend backend,
                 CgOptions cg = {});

    Backend backend() const { return backend_; }
    // Solves (H + B) dx = -g. For Backend::None the barrier must be empty.
    GlobalStepResult solve(const ipc::BarrierBlocks& barrier, const VecX& g);

    // Builds the workspace now (so its cost is not charged to a frame).
    const SchurWorkspace& workspace();
    // Shares an existing workspace (e.g. between runs on the same mesh). Its
    // system must equal this solver's and outlive it.
    void set_workspace(std::shared_ptr<const SchurWorkspace> ws);
    std::shared_ptr<const SchurWorkspace> shared_workspace() const { return ws_; }

private:
    const StiffnessSystem* sys_;
    VertexPartition partition_;
    Backend backend_;
    CgOptions cg_;
    std::shared_ptr<const SchurWorkspace> ws_;
};

}  // namespace pdipc
