#include "pdipc/sparse_cholesky.hpp"

#include <cholmod.h>

#include <atomic>
#include <cmath>
#include <iostream>

namespace pdipc {

namespace {

std::atomic<long> g_factorizations{0};

cholmod_dense view_dense(const MatX& b)
{
    cholmod_dense d{};
    d.nrow = static_cast<std::size_t>(b.rows());
    d.ncol = static_cast<std::size_t>(b.cols());
    d.nzmax = d.nrow * d.ncol;
    d.d = d.nrow;
    d.x = const_cast<double*>(b.data());
    d.z = nullptr;
    d.xtype = CHOLMOD_REAL;
    d.dtype = CHOLMOD_DOUBLE;
    return d;
}

cholmod_sparse view_lower(const SpMat& lower)
{
    cholmod_sparse view{};
    view.nrow = static_cast<std::size_t>(lower.rows());
    view.ncol = static_cast<std::size_t>(lower.cols());
    view.nzmax = static_cast<std::size_t>(lower.nonZeros());
    view.p = const_cast<int*>(lower.outerIndexPtr());
    view.i = const_cast<int*>(lower.innerIndexPtr());
    view.x = const_cast<double*>(lower.valuePtr());
    view.z = nullptr;
    view.nz = nullptr;
    view.stype = -1;
    view.itype = CHOLMOD_INT;
    view.xtype = CHOLMOD_REAL;
    view.dtype = CHOLMOD_DOUBLE;
    view.sorted = 1;
    view.packed = 1;
    return view;
}

// The supernodal path delegates dense kernels to the system BLAS. Some
// OpenBLAS builds select broken kernels on recent CPUs (workaround: set
// OPENBLAS_CORETYPE), so factor a dense-ish probe once and fall back to the
// BLAS-free simplicial method if the result is wrong.
bool supernodal_is_reliable()
{
    static const bool reliable = [] {
        const int n = 400;
        const int nrhs = 64;
        MatX M(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                M(i, j) = std::sin(1.0 + i + 2.0 * j);
            }
        }
        MatX A = M * M.transpose();
        A.diagonal().array() += n;
        const SpMat full = A.sparseView();
        SpMat lower = full.triangularView<Eigen::Lower>();
        lower.makeCompressed();
        MatX B(n, nrhs);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < nrhs; ++j) {
                B(i, j) = std::cos(0.5 + 3.0 * i - j);
            }
        }

        cholmod_common c{};
        cholmod_start(&c);
        c.supernodal = CHOLMOD_SUPERNODAL;
        c.final_ll = 1;
        c.print = 0;
        c.error_handler = nullptr;
        bool ok = false;
        cholmod_sparse view = view_lower(lower);
        cholmod_factor* f = cholmod_analyze(&view, &c);
        if (f && cholmod_factorize(&view, f, &c) && c.status == CHOLMOD_OK) {
            cholmod_dense in = view_dense(B);
            cholmod_dense* out = cholmod_solve(CHOLMOD_A, f, &in, &c);
            if (out) {
                const Eigen::Map<const MatX> X(static_cast<const double*>(out->x), n, nrhs);
                const double res = (A * X - B).norm() / B.norm();
                ok = std::isfinite(res) && res < 1e-10;
                cholmod_free_dense(&out, &c);
            }
        }
        if (f) {
            cholmod_free_factor(&f, &c);
        }
        cholmod_finish(&c);
        if (!ok) {
            std::cerr << "warning: system BLAS failed a supernodal Cholesky self-test; using the slower "
                         "simplicial factorization (setting OPENBLAS_CORETYPE=Haswell usually fixes this)\n";
        }
        return ok;
    }();
    return reliable;
}

}  // namespace

struct SparseCholesky::Impl {
    cholmod_common common{};
    cholmod_factor* factor = nullptr;
    mutable std::mutex mutex;

    Impl()
    {
        cholmod_start(&common);
        common.supernodal = supernodal_is_reliable() ? CHOLMOD_SUPERNODAL : CHOLMOD_SIMPLICIAL;
        common.final_ll = 1;
        common.print = 0;
        common.error_handler = nullptr;
    }
    ~Impl()
    {
        if (factor) {
            cholmod_free_factor(&factor, &common);
        }
        cholmod_finish(&common);
    }
};

SparseCholesky::SparseCholesky() : impl_(std::make_unique<Impl>()) {}
SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

bool SparseCholesky::factorized() const { return impl_ && impl_->factor != nullptr; }

long SparseCholesky::factorization_count() { return g_factorizations.load(); }

void SparseCholesky::factorize(const SpMat& A)
{
    if (A.rows() != A.cols()) {
        throw ContractError("SparseCholesky: matrix must be square");
    }
    SpMat lower = A.triangularView<Eigen::Lower>();
    lower.makeCompressed();

    cholmod_sparse view = view_lower(lower);

    std::lock_guard lock(impl_->mutex);
    auto& c = impl_->common;
    if (impl_->factor) {
        cholmod_free_factor(&impl_->factor, &c);
    }
    rows_ = static_cast<int>(A.rows());
    if (rows_ == 0) {
        return;
    }
    impl_->factor = cholmod_analyze(&view, &c);
    if (!impl_->factor) {
        throw NumericalError("CHOLMOD analysis failed");
    }
    cholmod_factorize(&view, impl_->factor, &c);
    ++g_factorizations;
    if (c.status == CHOLMOD_NOT_POSDEF || impl_->factor->minor < impl_->factor->n) {
        cholmod_free_factor(&impl_->factor, &c);
        throw NumericalError("sparse Cholesky failed: matrix is not positive definite");
    }
    if (c.status != CHOLMOD_OK) {
        cholmod_free_factor(&impl_->factor, &c);
        throw NumericalError("sparse Cholesky failed");
    }
    // Round-off can leave tiny positive pivots on a singular matrix.
    if (cholmod_rcond(impl_->factor, &c) < 1e-14) {
        cholmod_free_factor(&impl_->factor, &c);
        throw NumericalError("sparse Cholesky failed: matrix is numerically singular");
    }
}

MatX SparseCholesky::run(int system_sequence, const MatX& b) const
{
    if (b.rows() != rows_) {
        throw ContractError("SparseCholesky: right-hand side has wrong size");
    }
    if (rows_ == 0 || b.cols() == 0) {
        return b;
    }
    if (!factorized()) {
        throw ContractError("SparseCholesky: not factorized");
    }
    // Sequences: 0 = A, 1 = L^{-1} P, 2 = P^T L^{-T}
    static constexpr int kSteps[3][2] = {{CHOLMOD_A, -1}, {CHOLMOD_P, CHOLMOD_L}, {CHOLMOD_Lt, CHOLMOD_Pt}};

    std::lock_guard lock(impl_->mutex);
    auto& c = impl_->common;
    MatX current = b;
    for (int step : kSteps[system_sequence]) {
        if (step < 0) {
            break;
        }
        cholmod_dense in = view_dense(current);
        cholmod_dense* out = cholmod_solve(step, impl_->factor, &in, &c);
        if (!out) {
            throw NumericalError("CHOLMOD solve failed");
        }
        current = Eigen::Map<const MatX>(static_cast<const double*>(out->x), b.rows(), b.cols());
        cholmod_free_dense(&out, &c);
    }
    return current;
}

MatX SparseCholesky::solve(const MatX& b) const { return run(0, b); }
MatX SparseCholesky::solve_lower(const MatX& b) const { return run(1, b); }
MatX SparseCholesky::solve_upper(const MatX& b) const { return run(2, b); }

SpMat SparseCholesky::permuted_factor() const
{
    if (rows_ == 0) {
        return SpMat(0, 0);
    }
    std::lock_guard lock(impl_->mutex);
    auto& c = impl_->common;
    cholmod_factor* copy = cholmod_copy_factor(impl_->factor, &c);
    cholmod_sparse* L = cholmod_factor_to_sparse(copy, &c);
    const auto* perm = static_cast<const int*>(impl_->factor->Perm);
    const auto* colp = static_cast<const int*>(L->p);
    const auto* rowi = static_cast<const int*>(L->i);
    const auto* val = static_cast<const double*>(L->x);
    std::vector<Triplet> trips;
    for (std::size_t j = 0; j < L->ncol; ++j) {
        for (int k = colp[j]; k < colp[j + 1]; ++k) {
            trips.emplace_back(perm[rowi[k]], static_cast<int>(j), val[k]);
        }
    }
    cholmod_free_sparse(&L, &c);
    cholmod_free_factor(&copy, &c);
    SpMat out(rows_, rows_);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace pdipc
