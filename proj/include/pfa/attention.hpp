#ifndef PFA_ATTENTION_HPP
#define PFA_ATTENTION_HPP

#include <cstdint>

#include "pfa/dense.hpp"
#include "pfa/sparse.hpp"

namespace pfa {

/// Q, K, V for one (window, head): each N x d_head.
struct AttentionInputs {
    Matrix q, k, v;
    std::int64_t head_dim() const { return q.cols(); }
    std::int64_t tokens() const { return q.rows(); }
};

struct AttentionResult {
    RowSparseMatrix map;  // row-stochastic
    Matrix output;        // N x d_head
};

struct PfaStepResult {
    RowSparseMatrix attention;  // A^l, support == mask support
    IndexMask mask;             // I^l
    Matrix output;              // O^l
    std::uint64_t macs_scores = 0;
    std::uint64_t macs_aggregate = 0;
};

/// Softmax(QK^T/sqrt(d)) V with a full-support map.
AttentionResult vanilla_attention(const AttentionInputs& in);

/// Top-k on the pre-softmax scores; dropped positions are excluded from
/// the softmax denominator, not zero-valued.
AttentionResult topk_attention(const AttentionInputs& in, std::int64_t k);

/// Dense recomputation gated only by inheritance: full score matrix,
/// elementwise product with the previous map on its support, renormalize.
AttentionResult progressive_attention_step(const AttentionInputs& in,
                                           const RowSparseMatrix& previous);

/// One focused step: scores only at previous_mask positions, masked
/// softmax at 1/sqrt(d), inherit from previous, keep top k_l per row,
/// aggregate V over the surviving support.
PfaStepResult pfa_step(const AttentionInputs& in, const RowSparseMatrix& previous,
                       const IndexMask& previous_mask, std::int64_t k_l,
                       bool renormalize_after_topk);

}  // namespace pfa

#endif
