#include "pdipc/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pdipc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

GlobalStepResult finish(Backend backend, const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier,
                        const VecX& g, VecX dx, Clock::time_point start)
{
    GlobalStepResult out;
    out.stats.backend = backend;
    out.stats.wall_ms = elapsed_ms(start);
    out.delta_x = std::move(dx);
    out.residual = system_residual(sys, barrier, g, out.delta_x);
    out.stats.residual = out.residual;
    out.stats.n_c = barrier.n_c();
    return out;
}

// Staged block solve of P (H + B) P^T x = -P g with the Sigma-hat solve supplied.
template <typename SolveSigmaHat>
VecX staged_solve(const SchurWorkspace& ws, const VecX& g, SolveSigmaHat&& solve_sigma_hat)
{
    const int n1 = ws.n1_dofs();
    const int n2 = ws.n2_dofs();
    const VecX b = -ws.partition.permute(g);
    const VecX y1 = ws.L1.solve_lower(b.head(n1));
    const VecX y2 = b.tail(n2) - ws.H21 * ws.L1.solve_upper(y1);
    VecX x(n1 + n2);
    x.tail(n2) = solve_sigma_hat(y2);
    x.head(n1) = ws.L1.solve_upper(y1 - ws.L1.solve_lower(ws.H12 * x.tail(n2)));
    return ws.partition.unpermute(x);
}

}  // namespace

std::string_view backend_name(Backend b)
{
    switch (b) {
    case Backend::None:
        return "none";
    case Backend::Dense:
        return "dense";
    case Backend::CG:
        return "cg";
    case Backend::Schur:
        return "schur";
    case Backend::Woodbury:
        return "woodbury";
    }
    return "unknown";
}

Backend parse_backend(std::string_view tag)
{
    for (Backend b : {Backend::None, Backend::Dense, Backend::CG, Backend::Schur, Backend::Woodbury}) {
        if (tag == backend_name(b)) {
            return b;
        }
    }
    throw ParseError("unknown solver backend '" + std::string(tag) + "'");
}

double system_residual(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier, const VecX& g,
                       const VecX& dx)
{
    VecX r = sys.H * dx + g;
    barrier.apply_add(dx, r);
    const double gn = g.norm();
    return gn > 0 ? r.norm() / gn : r.norm();
}

MatX dense_system(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier)
{
    MatX A = MatX(sys.H);
    const auto& aff = barrier.affected;
    for (int i = 0; i < barrier.n_c(); ++i) {
        for (int j = 0; j < barrier.n_c(); ++j) {
            A.block<3, 3>(3 * aff[i], 3 * aff[j]) += barrier.hessian.block<3, 3>(3 * i, 3 * j);
        }
    }
    return A;
}

GlobalStepResult solve_dense_reference(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier,
                                       const VecX& g)
{
    if (sys.dofs() > kDenseReferenceMaxDofs) {
        throw ContractError("dense reference solve limited to " + std::to_string(kDenseReferenceMaxDofs) +
                            " DOFs, system has " + std::to_string(sys.dofs()));
    }
    const auto start = Clock::now();
    const Eigen::LLT<MatX> llt(dense_system(sys, barrier));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("dense reference solve: system is not positive definite");
    }
    return finish(Backend::Dense, sys, barrier, g, llt.solve(-g), start);
}

GlobalStepResult solve_cg(const StiffnessSystem& sys, const ipc::BarrierBlocks& barrier, const VecX& g,
                          const CgOptions& options)
{
    const auto start = Clock::now();
    const int n = sys.dofs();
    const int max_iter =
        options.max_iter > 0 ? options.max_iter : std::max(1, static_cast<int>(10.0 * std::sqrt(double(n))));
    const SparseCholesky& L = sys.factor;

    const VecX rhs = -L.solve_lower(g);
    const double rhs_norm = rhs.norm();
    VecX y = VecX::Zero(n);
    VecX r = rhs;
    VecX p = r;
    double rr = r.squaredNorm();
    int iter = 0;
    while (rhs_norm > 0 && std::sqrt(rr) > options.tol * rhs_norm && iter < max_iter) {
        const VecX w = L.solve_upper(p);
        VecX z = sys.H * w;
        barrier.apply_add(w, z);
        const VecX q = L.solve_lower(z);
        const double pq = p.dot(q);
        if (!(pq > 0)) {
            throw NumericalError("CG: operator is not positive definite");
        }
        const double alpha = rr / pq;
        y += alpha * p;
        r -= alpha * q;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        ++iter;
    }
    VecX dx = rhs_norm > 0 ? VecX(L.solve_upper(y)) : VecX::Zero(n);
    auto out = finish(Backend::CG, sys, barrier, g, std::move(dx), start);
    out.stats.cg_iterations = iter;
    out.stats.converged = rhs_norm == 0 || std::sqrt(rr) <= options.tol * rhs_norm;
    return out;
}

SchurWorkspace build_schur(const StiffnessSystem& sys, const VertexPartition& partition)
{
    const auto start = Clock::now();
    if (partition.size() != sys.mesh->dofs.num_free_vertices()) {
        throw ContractError("partition does not match the stiffness system");
    }
    SchurWorkspace ws;
    ws.sys = &sys;
    ws.partition = partition;
    const int n1 = ws.n1_dofs();
    const int n2 = ws.n2_dofs();
    const auto& target = partition.dof_targets();

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(sys.H.nonZeros()));
    for (int col = 0; col < sys.H.outerSize(); ++col) {
        for (SpMat::InnerIterator it(sys.H, col); it; ++it) {
            trips.emplace_back(target[it.row()], target[col], it.value());
        }
    }
    SpMat Hp(n1 + n2, n1 + n2);
    Hp.setFromTriplets(trips.begin(), trips.end());
    ws.H11 = Hp.topLeftCorner(n1, n1);
    ws.H12 = Hp.topRightCorner(n1, n2);
    ws.H21 = Hp.bottomLeftCorner(n2, n1);
    ws.H22 = Hp.bottomRightCorner(n2, n2);
    for (SpMat* m : {&ws.H11, &ws.H12, &ws.H21, &ws.H22}) {
        m->makeCompressed();
    }
    ws.L1.factorize(ws.H11);

    ws.sigma = MatX(ws.H22);
    if (n1 > 0 && n2 > 0) {
        // Sigma -= H21 H11^{-1} H12, in panels over the nonzero columns of H12.
        std::vector<int> cols;
        for (int j = 0; j < n2; ++j) {
            if (ws.H12.outerIndexPtr()[j + 1] > ws.H12.outerIndexPtr()[j]) {
                cols.push_back(j);
            }
        }
        constexpr int kPanel = 128;
        for (std::size_t first = 0; first < cols.size(); first += kPanel) {
            const int k = static_cast<int>(std::min<std::size_t>(kPanel, cols.size() - first));
            MatX D = MatX::Zero(n1, k);
            for (int q = 0; q < k; ++q) {
                for (SpMat::InnerIterator it(ws.H12, cols[first + q]); it; ++it) {
                    D(it.row(), q) = it.value();
                }
            }
            const MatX update = ws.H21 * ws.L1.solve(D);
            for (int q = 0; q < k; ++q) {
                ws.sigma.col(cols[first + q]) -= update.col(q);
            }
        }
        ws.sigma = 0.5 * (ws.sigma + ws.sigma.transpose());
    }
    if (n2 > 0) {
        const Eigen::LLT<MatX> llt(ws.sigma);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Schur complement is not positive definite");
        }
        ws.sigma_inv = llt.solve(MatX::Identity(n2, n2));
        ws.sigma_inv = 0.5 * (ws.sigma_inv + ws.sigma_inv.transpose());
    }
    ws.build_ms = elapsed_ms(start);
    return ws;
}

namespace {

// Rows of the collision-aware block addressed by the barrier's affected vertices, in barrier order.
std::vector<int> block2_rows(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier)
{
    std::vector<int> rows;
    rows.reserve(3 * barrier.affected.size());
    const int n1 = ws.partition.n1();
    for (int f : barrier.affected) {
        const int k = ws.partition.slot_of_free(f) - n1;
        if (k < 0) {
            throw ContractError("barrier touches a collision-agnostic vertex");
        }
        for (int c = 0; c < 3; ++c) {
            rows.push_back(3 * k + c);
        }
    }
    return rows;
}

}  // namespace

MatX barrier_block22(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier)
{
    const auto rows = block2_rows(ws, barrier);
    MatX B = MatX::Zero(ws.n2_dofs(), ws.n2_dofs());
    B(rows, rows) = barrier.hessian;
    return B;
}

SchurFactors schur_factors(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier)
{
    const int n1 = ws.n1_dofs();
    const int n2 = ws.n2_dofs();
    const int n = n1 + n2;
    SchurFactors out;
    out.lower = MatX::Zero(n, n);
    out.lower.topLeftCorner(n1, n1) = MatX(ws.L1.permuted_factor());
    if (n1 > 0 && n2 > 0) {
        out.lower.bottomLeftCorner(n2, n1) = ws.L1.solve_lower(MatX(ws.H12)).transpose();
    }
    out.lower.bottomRightCorner(n2, n2).setIdentity();
    out.middle = MatX::Identity(n, n);
    out.middle.bottomRightCorner(n2, n2) = ws.sigma + barrier_block22(ws, barrier);
    out.upper = out.lower.transpose();

    const MatX A = dense_system(*ws.sys, barrier);
    const auto& target = ws.partition.dof_targets();
    out.permuted_system = MatX::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out.permuted_system(target[i], target[j]) = A(i, j);
        }
    }
    return out;
}

GlobalStepResult solve_schur(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier, const VecX& g)
{
    const auto start = Clock::now();
    const StiffnessSystem& sys = *ws.sys;
    if (ws.degenerate()) {
        if (!barrier.empty()) {
            throw ContractError("barrier present but no collision-aware vertices");
        }
        return finish(Backend::Schur, sys, barrier, g, -solve_collision_free(sys, g), start);
    }
    VecX dx = staged_solve(ws, g, [&](const VecX& y2) -> VecX {
        MatX sigma_hat = ws.sigma;
        if (!barrier.empty()) {
            const auto rows = block2_rows(ws, barrier);
            sigma_hat(rows, rows) += barrier.hessian;
        }
        const Eigen::LLT<MatX> llt(sigma_hat);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Schur solve: Sigma + B22 is not positive definite");
        }
        return llt.solve(y2);
    });
    return finish(Backend::Schur, sys, barrier, g, std::move(dx), start);
}

WoodburyInverse::WoodburyInverse(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier)
    : ws_(&ws), selected_(block2_rows(ws, barrier))
{
    const int m = static_cast<int>(selected_.size());
    if (m == 0) {
        return;
    }
    Eigen::LLT<MatX> bc(barrier.hessian);
    if (bc.info() != Eigen::Success || !(bc.rcond() > 1e-12)) {
        regularization_ = 1e-8 * barrier.hessian.trace() / m;
        if (!(regularization_ > 0)) {
            throw NumericalError("Woodbury update: barrier block has no positive curvature");
        }
        bc.compute(barrier.hessian + regularization_ * MatX::Identity(m, m));
        if (bc.info() != Eigen::Success) {
            throw NumericalError("Woodbury update: regularized barrier block is not invertible");
        }
    }
    MatX inner = bc.solve(MatX::Identity(m, m));
    inner += ws.sigma_inv(selected_, selected_);
    inner = 0.5 * (inner + inner.transpose());
    inner_.compute(inner);
    if (inner_.info() != Eigen::Success) {
        throw NumericalError("Woodbury update: capacitance matrix is singular");
    }
    sigma_inv_cols_ = ws.sigma_inv(Eigen::all, selected_);
}

VecX WoodburyInverse::apply(const VecX& v) const
{
    VecX t = ws_->sigma_inv * v;
    if (!selected_.empty()) {
        const VecX ts = t(selected_);
        t.noalias() -= sigma_inv_cols_ * inner_.solve(ts);
    }
    return t;
}

GlobalStepResult solve_woodbury(const SchurWorkspace& ws, const ipc::BarrierBlocks& barrier, const VecX& g)
{
    const auto start = Clock::now();
    const StiffnessSystem& sys = *ws.sys;
    if (ws.degenerate()) {
        if (!barrier.empty()) {
            throw ContractError("barrier present but no collision-aware vertices");
        }
        return finish(Backend::Woodbury, sys, barrier, g, -solve_collision_free(sys, g), start);
    }
    const WoodburyInverse inverse(ws, barrier);
    VecX dx = staged_solve(ws, g, [&](const VecX& y2) { return inverse.apply(y2); });
    auto out = finish(Backend::Woodbury, sys, barrier, g, std::move(dx), start);
    out.stats.update_rank = inverse.rank();
    out.stats.regularization = inverse.regularization();
    return out;
}

GlobalSolver::GlobalSolver(const StiffnessSystem& sys, const VertexPartition& partition, Backend backend,
                           CgOptions cg)
    : sys_(&sys), partition_(partition), backend_(backend), cg_(cg)
{
}

const SchurWorkspace& GlobalSolver::workspace()
{
    if (!ws_) {
        ws_ = std::make_shared<const SchurWorkspace>(build_schur(*sys_, partition_));
    }
    return *ws_;
}

void GlobalSolver::set_workspace(std::shared_ptr<const SchurWorkspace> ws)
{
    if (ws && ws->sys != sys_) {
        // A workspace from another system is fine if that system is identical.
        const SpMat& a = ws->sys->H;
        const SpMat& b = sys_->H;
        const bool same = a.rows() == b.rows() && a.nonZeros() == b.nonZeros() && a.isCompressed() &&
                          b.isCompressed() &&
                          std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
                          std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr()) &&
                          std::equal(a.valuePtr(), a.valuePtr() + a.nonZeros(), b.valuePtr()) &&
                          ws->partition.order() == partition_.order();
        if (!same) {
            throw ContractError("workspace was built for a different stiffness system");
        }
    }
    ws_ = std::move(ws);
}

GlobalStepResult GlobalSolver::solve(const ipc::BarrierBlocks& barrier, const VecX& g)
{
    switch (backend_) {
    case Backend::None: {
        if (!barrier.empty()) {
            throw ContractError("backend none does not handle contact");
        }
        const auto start = Clock::now();
        return finish(Backend::None, *sys_, barrier, g, -solve_collision_free(*sys_, g), start);
    }
    case Backend::Dense:
        return solve_dense_reference(*sys_, barrier, g);
    case Backend::CG:
        return solve_cg(*sys_, barrier, g, cg_);
    case Backend::Schur:
        return solve_schur(workspace(), barrier, g);
    case Backend::Woodbury:
        return solve_woodbury(workspace(), barrier, g);
    }
    throw ContractError("unknown backend");
}

}  // namespace pdipc
