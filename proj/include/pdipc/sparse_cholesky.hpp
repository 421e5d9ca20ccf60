#pragma once

#include "pdipc/common.hpp"

#include <memory>
#include <mutex>

namespace pdipc {

// Exact sparse Cholesky (CHOLMOD, supernodal when the BLAS is sound) of an SPD matrix A with a
// fill-reducing permutation: P A P^T = L L^T. The factor is exposed as
// Lt = P^T L, so A = Lt Lt^T and the split-preconditioned operators
// Lt^{-1} and Lt^{-T} are available separately.
class SparseCholesky {
public:
    SparseCholesky();
    ~SparseCholesky();
    SparseCholesky(const SparseCholesky&) = delete;
    SparseCholesky& operator=(const SparseCholesky&) = delete;
    SparseCholesky(SparseCholesky&&) noexcept;
    SparseCholesky& operator=(SparseCholesky&&) noexcept;

    // Throws NumericalError if A is not positive definite.
    void factorize(const SpMat& A);
    bool factorized() const;
    int rows() const { return rows_; }

    // A^{-1} b, column-wise for matrices.
    MatX solve(const MatX& b) const;
    // Lt^{-1} b = L^{-1} P b
    MatX solve_lower(const MatX& b) const;
    // Lt^{-T} b = P^T L^{-T} b
    MatX solve_upper(const MatX& b) const;

    // Sparse Lt = P^T L (debug and tests; small systems only).
    SpMat permuted_factor() const;

    // Process-wide number of numeric factorizations performed.
    static long factorization_count();

private:
    struct Impl;
    MatX run(int system_sequence, const MatX& b) const;

    std::unique_ptr<Impl> impl_;
    int rows_ = 0;
};

}  // namespace pdipc
