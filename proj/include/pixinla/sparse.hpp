#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pixinla {

using index_t = std::int32_t;

/// Sparse symmetric matrix, lower triangle (including the diagonal) in
/// compressed-column form. Row indices are strictly increasing within each
/// column and every diagonal entry is stored explicitly.
struct SparseSymMatrix {
    index_t n = 0;
    std::vector<index_t> col_ptr;  // size n + 1
    std::vector<index_t> row_idx;  // first entry of column j is row j
    std::vector<double> values;

    /// Build from (row, col, value) triplets. Entries above the diagonal are
    /// mirrored into the lower triangle; duplicates are summed. Supply each
    /// off-diagonal once (either half) or its value doubles.
    static SparseSymMatrix from_triplets(
        index_t n,
        std::span<const index_t> rows,
        std::span<const index_t> cols,
        std::span<const double> vals);

    index_t nnz() const { return static_cast<index_t>(row_idx.size()); }

    double diagonal(index_t j) const { return values[col_ptr[j]]; }

    /// Entry (i, j) with i >= j, zero if not stored.
    double at(index_t i, index_t j) const;

    /// Copy with c added to the diagonal.
    SparseSymMatrix with_diagonal_added(std::span<const double> c) const;

    /// Throws on violated structural invariants.
    void validate() const;
};

/// y = Q x using the symmetric structure.
std::vector<double> multiply(const SparseSymMatrix& Q, std::span<const double> x);

/// x' Q x.
double quad_form(const SparseSymMatrix& Q, std::span<const double> x);

enum class Ordering {
    natural,        ///< identity permutation; lattice matrices are already banded
    band_reducing,  ///< reverse Cuthill-McKee
};

/// Cholesky factorization P Q P' = L L'. Immutable once built; safe to share
/// across threads for solves and selected inversion.
struct CholFactor {
    index_t n = 0;
    std::vector<index_t> perm;      // new index -> original index
    std::vector<index_t> perm_inv;  // original index -> new index
    // L in compressed-column lower form, diagonal entry first in each column.
    std::vector<index_t> col_ptr;
    std::vector<index_t> row_idx;
    std::vector<double> values;
    double logdet = 0.0;  // ln det Q

    double diag(index_t j) const { return values[col_ptr[j]]; }
};

/// Sparse Cholesky with the requested ordering. Throws NotPositiveDefinite
/// when a pivot falls at or below pivot_floor (default distinguishes true
/// indefiniteness from underflow).
CholFactor factorize(const SparseSymMatrix& Q, Ordering ordering = Ordering::natural,
                     double pivot_floor = 1e-300);

/// Solve Q z = b through the factor.
std::vector<double> solve(const CholFactor& factor, std::span<const double> b);

/// ln det Q = 2 sum ln L_ii.
double log_det(const CholFactor& factor);

/// Entries of Q^{-1} on the sparsity pattern of L + L' (Takahashi recursions,
/// reverse column order). Every diagonal entry is present and positive.
SparseSymMatrix selected_inverse(const CholFactor& factor);

/// Just the diagonal of Q^{-1}, in original index order.
std::vector<double> selected_inverse_diagonal(const CholFactor& factor);

/// Reverse Cuthill-McKee permutation (new index -> original index) for the
/// symmetric pattern of Q.
std::vector<index_t> rcm_ordering(const SparseSymMatrix& Q);

}  // namespace pixinla
