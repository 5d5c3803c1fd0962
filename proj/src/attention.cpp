#include "pfa/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace pfa {

namespace {

double head_scale(const AttentionInputs& in) {
    return 1.0 / std::sqrt(static_cast<double>(in.head_dim()));
}

}  // namespace

AttentionResult vanilla_attention(const AttentionInputs& in) {
    const std::int64_t n = in.tokens();
    const IndexMask full = IndexMask::full(n, n);
    const Matrix scores = dense_matmul(in.q, in.k.transpose());
    AttentionResult res;
    res.map = masked_softmax_rows(scores, full, head_scale(in));
    res.output = smm_aggregate(res.map, in.v, full).output;
    return res;
}

AttentionResult topk_attention(const AttentionInputs& in, std::int64_t k) {
    const std::int64_t n = in.tokens();
    if (k < 1 || k > n) throw std::invalid_argument("topk_attention: k out of range");
    const Matrix scores = dense_matmul(in.q, in.k.transpose());
    // select on scaled scores, then softmax over only the retained columns
    const double scale = head_scale(in);
    RowSparseMatrix scaled(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        auto& row = scaled.row_entries[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) row.push_back({j, scale * scores(i, j)});
    }
    const IndexMask mask = sign_mask(topk_rows(scaled, k));
    AttentionResult res;
    res.map = masked_softmax_rows(scores, mask, scale);
    res.output = smm_aggregate(res.map, in.v, mask).output;
    return res;
}

AttentionResult progressive_attention_step(const AttentionInputs& in,
                                           const RowSparseMatrix& previous) {
    const std::int64_t n = in.tokens();
    if (previous.rows != n || previous.cols != n) {
        throw std::invalid_argument("progressive_attention_step: previous map shape mismatch");
    }
    const Matrix scores = dense_matmul(in.q, in.k.transpose());
    const RowSparseMatrix calculated =
        masked_softmax_rows(scores, IndexMask::full(n, n), head_scale(in));
    // restrict the dense calculated map to previous's support before the product
    RowSparseMatrix restricted(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& prev = previous.row_entries[static_cast<std::size_t>(i)];
        auto& row = restricted.row_entries[static_cast<std::size_t>(i)];
        row.reserve(prev.size());
        const auto& cal = calculated.row_entries[static_cast<std::size_t>(i)];
        for (const auto& e : prev) row.push_back({e.col, cal[static_cast<std::size_t>(e.col)].weight});
    }
    AttentionResult res;
    res.map = hadamard_rownorm(restricted, previous);
    res.output = smm_aggregate(res.map, in.v, sign_mask(res.map)).output;
    return res;
}

PfaStepResult pfa_step(const AttentionInputs& in, const RowSparseMatrix& previous,
                       const IndexMask& previous_mask, std::int64_t k_l,
                       bool renormalize_after_topk) {
    if (k_l < 1) throw std::invalid_argument("pfa_step: k_l must be >= 1");
    PfaStepResult res;
    SmmScoresResult sc = smm_scores(in.q, in.k, previous_mask);
    res.macs_scores = sc.macs;
    const RowSparseMatrix softmaxed = softmax_rows(sc.scores, head_scale(in));
    const RowSparseMatrix inherited = hadamard_rownorm(softmaxed, previous);
    RowSparseMatrix focused = topk_rows(inherited, k_l);
    if (renormalize_after_topk) {
        // rows that lost no entries are already normalized; leave their
        // bits untouched
        for (std::size_t i = 0; i < focused.row_entries.size(); ++i) {
            auto& row = focused.row_entries[i];
            if (row.size() == inherited.row_entries[i].size()) continue;
            double sum = 0.0;
            for (const auto& e : row) sum += e.weight;
            if (!(sum > 0.0)) {
                throw std::invalid_argument("pfa_step: zero row sum after top-k");
            }
            for (auto& e : row) e.weight /= sum;
        }
    }
    res.mask = sign_mask(focused);
    SmmAggregateResult agg = smm_aggregate(focused, in.v, res.mask);
    res.attention = std::move(focused);
    res.output = std::move(agg.output);
    res.macs_aggregate = agg.macs;
    return res;
}

}  // namespace pfa
