#include "pfa/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pfa {

SmmScoresResult smm_scores(const Matrix& q, const Matrix& k, const IndexMask& mask) {
    if (q.cols() != k.cols()) {
        throw std::invalid_argument("smm_scores: q and k head dims differ");
    }
    if (mask.rows != q.rows() || mask.cols != k.rows()) {
        throw std::invalid_argument("smm_scores: mask must be q.rows x k.rows");
    }
    const Eigen::Index d = q.cols();
    SmmScoresResult res;
    res.scores = RowSparseMatrix(q.rows(), k.rows());
    for (std::int64_t i = 0; i < mask.rows; ++i) {
        const auto& cols = mask.row_cols[static_cast<std::size_t>(i)];
        auto& row = res.scores.row_entries[static_cast<std::size_t>(i)];
        row.reserve(cols.size());
        const double* qi = q.row(i).data();
        for (std::int64_t j : cols) {
            const double* kj = k.row(j).data();
            double acc = 0.0;
            for (Eigen::Index p = 0; p < d; ++p) acc += qi[p] * kj[p];
            row.push_back({j, acc});
        }
        res.macs += static_cast<std::uint64_t>(cols.size()) * static_cast<std::uint64_t>(d);
    }
    return res;
}

SmmAggregateResult smm_aggregate(const RowSparseMatrix& a, const Matrix& v, const IndexMask& mask) {
    if (a.cols != v.rows()) {
        throw std::invalid_argument("smm_aggregate: a.cols must equal v.rows");
    }
    if (mask.rows != a.rows || mask.cols != a.cols) {
        throw std::invalid_argument("smm_aggregate: mask shape mismatch");
    }
    for (std::int64_t i = 0; i < a.rows; ++i) {
        const auto& ar = a.row_entries[static_cast<std::size_t>(i)];
        const auto& mr = mask.row_cols[static_cast<std::size_t>(i)];
        if (ar.size() != mr.size() ||
            !std::equal(ar.begin(), ar.end(), mr.begin(),
                        [](const SparseEntry& e, std::int64_t c) { return e.col == c; })) {
            throw std::invalid_argument("smm_aggregate: mask support differs from map at row " +
                                        std::to_string(i));
        }
    }
    const Eigen::Index d = v.cols();
    SmmAggregateResult res;
    res.output = Matrix::Zero(a.rows, d);
    for (std::int64_t i = 0; i < a.rows; ++i) {
        const auto& row = a.row_entries[static_cast<std::size_t>(i)];
        double* out = res.output.row(i).data();
        for (const auto& e : row) {
            const double w = e.weight;
            const double* vr = v.row(e.col).data();
            for (Eigen::Index p = 0; p < d; ++p) out[p] += w * vr[p];
        }
        res.macs += static_cast<std::uint64_t>(row.size()) * static_cast<std::uint64_t>(d);
    }
    return res;
}

RowSparseMatrix topk_rows(const RowSparseMatrix& m, std::int64_t k) {
    if (k < 1) throw std::invalid_argument("topk_rows: k must be >= 1");
    RowSparseMatrix out(m.rows, m.cols);
    std::vector<std::size_t> idx;
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& row = m.row_entries[static_cast<std::size_t>(i)];
        auto& o = out.row_entries[static_cast<std::size_t>(i)];
        if (static_cast<std::int64_t>(row.size()) <= k) {
            o = row;
            continue;
        }
        idx.resize(row.size());
        std::iota(idx.begin(), idx.end(), 0u);
        // larger weight first; ties keep the lower column index
        auto better = [&row](std::size_t a, std::size_t b) {
            if (row[a].weight != row[b].weight) return row[a].weight > row[b].weight;
            return row[a].col < row[b].col;
        };
        std::nth_element(idx.begin(), idx.begin() + k, idx.end(), better);
        idx.resize(static_cast<std::size_t>(k));
        std::sort(idx.begin(), idx.end());
        o.reserve(idx.size());
        for (std::size_t p : idx) o.push_back(row[p]);
    }
    return out;
}

IndexMask sign_mask(const RowSparseMatrix& m) {
    IndexMask mask(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& row = m.row_entries[static_cast<std::size_t>(i)];
        if (row.empty()) {
            throw std::invalid_argument("sign_mask: row " + std::to_string(i) +
                                        " has no candidates left");
        }
        auto& mc = mask.row_cols[static_cast<std::size_t>(i)];
        mc.reserve(row.size());
        for (const auto& e : row) mc.push_back(e.col);
    }
    return mask;
}

RowSparseMatrix hadamard_rownorm(const RowSparseMatrix& current, const RowSparseMatrix& previous) {
    if (current.rows != previous.rows || current.cols != previous.cols) {
        throw std::invalid_argument("hadamard_rownorm: shape mismatch");
    }
    RowSparseMatrix out(current.rows, current.cols);
    for (std::int64_t i = 0; i < current.rows; ++i) {
        const auto& cur = current.row_entries[static_cast<std::size_t>(i)];
        const auto& prev = previous.row_entries[static_cast<std::size_t>(i)];
        auto& o = out.row_entries[static_cast<std::size_t>(i)];
        o.reserve(cur.size());
        double sum = 0.0;
        std::size_t p = 0;
        for (const auto& e : cur) {
            while (p < prev.size() && prev[p].col < e.col) ++p;
            if (p == prev.size() || prev[p].col != e.col) {
                throw std::invalid_argument("hadamard_rownorm: current support not within previous at row " +
                                            std::to_string(i));
            }
            const double w = e.weight * prev[p].weight;
            o.push_back({e.col, w});
            sum += w;
        }
        if (!(sum > 0.0)) {
            throw std::invalid_argument("hadamard_rownorm: zero row sum at row " + std::to_string(i));
        }
        for (auto& e : o) e.weight /= sum;
    }
    return out;
}

RowSparseMatrix softmax_rows(const RowSparseMatrix& scores, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("softmax_rows: scale must be positive");
    RowSparseMatrix out(scores.rows, scores.cols);
    for (std::int64_t i = 0; i < scores.rows; ++i) {
        const auto& row = scores.row_entries[static_cast<std::size_t>(i)];
        if (row.empty()) {
            throw std::invalid_argument("softmax_rows: empty row " + std::to_string(i));
        }
        double max_s = scale * row.front().weight;
        for (const auto& e : row) max_s = std::max(max_s, scale * e.weight);
        auto& o = out.row_entries[static_cast<std::size_t>(i)];
        o.reserve(row.size());
        double sum = 0.0;
        for (const auto& e : row) {
            const double v = std::exp(scale * e.weight - max_s);
            o.push_back({e.col, v});
            sum += v;
        }
        for (auto& e : o) e.weight /= sum;
    }
    return out;
}

Matrix densify(const RowSparseMatrix& m) {
    Matrix out = Matrix::Zero(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i)
        for (const auto& e : m.row_entries[static_cast<std::size_t>(i)]) out(i, e.col) = e.weight;
    return out;
}

RowSparseMatrix sparsify_nonzero(const Matrix& m) {
    RowSparseMatrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto& row = out.row_entries[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0) row.push_back({j, m(i, j)});
        }
    }
    return out;
}

RowSparseMatrix uniform_full(std::int64_t n) {
    RowSparseMatrix out(n, n);
    const double w = 1.0 / static_cast<double>(n);
    for (auto& row : out.row_entries) {
        row.resize(static_cast<std::size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = {j, w};
    }
    return out;
}

}  // namespace pfa
