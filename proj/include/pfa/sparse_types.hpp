#ifndef PFA_SPARSE_TYPES_HPP
#define PFA_SPARSE_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pfa {

struct SparseEntry {
    std::int64_t col = 0;
    double weight = 0.0;
    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Per-row sorted (column, weight) lists. No explicit zeros: "sparse"
/// means structural sparsity, which keeps nnz-based MAC accounting exact.
struct RowSparseMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::vector<SparseEntry>> row_entries;  // size rows, cols ascending

    RowSparseMatrix() = default;
    RowSparseMatrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), row_entries(static_cast<std::size_t>(r)) {}

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& r : row_entries) n += r.size();
        return n;
    }
    friend bool operator==(const RowSparseMatrix&, const RowSparseMatrix&) = default;
};

/// Binary row-sparse mask; gates which (query, key) dot products run.
struct IndexMask {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::vector<std::int64_t>> row_cols;  // size rows, ascending

    IndexMask() = default;
    IndexMask(std::int64_t r, std::int64_t c) : rows(r), cols(c), row_cols(static_cast<std::size_t>(r)) {}

    static IndexMask full(std::int64_t r, std::int64_t c) {
        IndexMask m(r, c);
        for (auto& row : m.row_cols) {
            row.resize(static_cast<std::size_t>(c));
            for (std::int64_t j = 0; j < c; ++j) row[static_cast<std::size_t>(j)] = j;
        }
        return m;
    }

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& r : row_cols) n += r.size();
        return n;
    }
    friend bool operator==(const IndexMask&, const IndexMask&) = default;
};

}  // namespace pfa

#endif
