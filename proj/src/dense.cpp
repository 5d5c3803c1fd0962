#include "pfa/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfa {

RowSparseMatrix masked_softmax_rows(const Matrix& scores, const IndexMask& mask, double scale) {
    if (mask.rows != scores.rows() || mask.cols != scores.cols()) {
        throw std::invalid_argument("masked_softmax_rows: mask shape does not match scores");
    }
    if (!(scale > 0.0)) {
        throw std::invalid_argument("masked_softmax_rows: scale must be positive");
    }
    RowSparseMatrix out(scores.rows(), scores.cols());
    for (std::int64_t i = 0; i < scores.rows(); ++i) {
        const auto& cols = mask.row_cols[static_cast<std::size_t>(i)];
        if (cols.empty()) {
            throw std::invalid_argument("masked_softmax_rows: empty mask row " + std::to_string(i));
        }
        double max_s = -std::numeric_limits<double>::infinity();
        for (std::int64_t j : cols) max_s = std::max(max_s, scale * scores(i, j));
        auto& row = out.row_entries[static_cast<std::size_t>(i)];
        row.reserve(cols.size());
        double sum = 0.0;
        for (std::int64_t j : cols) {
            const double e = std::exp(scale * scores(i, j) - max_s);
            row.push_back({j, e});
            sum += e;
        }
        for (auto& e : row) e.weight /= sum;
    }
    return out;
}

RowSparseMatrix row_normalize(const RowSparseMatrix& m) {
    RowSparseMatrix out(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& row = m.row_entries[static_cast<std::size_t>(i)];
        if (row.empty()) {
            throw std::invalid_argument("row_normalize: empty row " + std::to_string(i));
        }
        double sum = 0.0;
        for (const auto& e : row) sum += e.weight;
        if (!(sum > 0.0)) {
            throw std::invalid_argument("row_normalize: nonpositive row sum at row " + std::to_string(i));
        }
        auto& o = out.row_entries[static_cast<std::size_t>(i)];
        o = row;
        for (auto& e : o) e.weight /= sum;
    }
    return out;
}

Matrix seeded_fill(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                   FillDistribution dist, double s) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("seeded_fill: dimensions must be >= 1");
    }
    std::mt19937_64 rng(seed);
    Matrix out(rows, cols);
    if (dist == FillDistribution::Uniform) {
        std::uniform_real_distribution<double> d(-s, s);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = d(rng);
    } else {
        std::normal_distribution<double> d(0.0, s);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = d(rng);
    }
    return out;
}

}  // namespace pfa
