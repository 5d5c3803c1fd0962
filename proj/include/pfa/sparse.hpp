#ifndef PFA_SPARSE_HPP
#define PFA_SPARSE_HPP

#include <cstdint>

#include "pfa/dense.hpp"
#include "pfa/sparse_types.hpp"

namespace pfa {

struct SmmScoresResult {
    RowSparseMatrix scores;  // unscaled q.k dot products at mask positions
    std::uint64_t macs = 0;  // exactly nnz(mask) * d
};

struct SmmAggregateResult {
    Matrix output;
    std::uint64_t macs = 0;  // exactly nnz(a) * v.cols
};

/// Masked score kernel: entry (i,j) = dot(q row i, k row j) iff mask(i,j)
/// is set; unset positions are never touched. Unscaled and un-softmaxed.
SmmScoresResult smm_scores(const Matrix& q, const Matrix& k, const IndexMask& mask);

/// Masked aggregation: output row i = sum over support of a(i,j) * v row j.
/// The mask must equal a's support exactly (a broken Sign/select pipeline
/// otherwise goes unnoticed).
SmmAggregateResult smm_aggregate(const RowSparseMatrix& a, const Matrix& v, const IndexMask& mask);

/// Keeps each row's min(k, nnz) largest weights; ties keep the lower
/// column index. Weights are not renormalized.
RowSparseMatrix topk_rows(const RowSparseMatrix& m, std::int64_t k);

/// Binary mask over the support of m. Errors on an empty row: an attention
/// row that lost all candidates signals over-aggressive focusing.
IndexMask sign_mask(const RowSparseMatrix& m);

/// Fused A^{l-1} * A_cal elementwise product followed by row normalization.
/// current's support must be a subset of previous's, row by row.
RowSparseMatrix hadamard_rownorm(const RowSparseMatrix& current, const RowSparseMatrix& previous);

/// Softmax per row over the stored entries of scale*scores, support
/// unchanged. Same math as masked_softmax_rows without the dense detour.
RowSparseMatrix softmax_rows(const RowSparseMatrix& scores, double scale);

/// Expands to a dense matrix with zeros at unset positions.
Matrix densify(const RowSparseMatrix& m);

/// Dense matrix as a full-support sparse map (zero entries are kept out).
RowSparseMatrix sparsify_nonzero(const Matrix& m);

/// Uniform full-support row-stochastic map (the all-ones A^0 after Norm).
RowSparseMatrix uniform_full(std::int64_t n);

}  // namespace pfa

#endif
