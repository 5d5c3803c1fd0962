#ifndef PFA_DENSE_HPP
#define PFA_DENSE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "pfa/sparse_types.hpp"

namespace pfa {

// Row-major doubles everywhere; the kernels stream rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Checked matrix product. Accumulation runs in ascending inner index,
/// so results are identical at any caller thread count.
inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument(
            "dense_matmul: shape mismatch (" + std::to_string(a.rows()) + "x" +
            std::to_string(a.cols()) + ") * (" + std::to_string(b.rows()) + "x" +
            std::to_string(b.cols()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (Eigen::Index p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
            out(i, j) = acc;
        }
    }
    return out;
}

/// Softmax per row over exactly the mask's set positions of scale*scores.
/// Max-subtraction per row; unset positions are absent from the result.
RowSparseMatrix masked_softmax_rows(const Matrix& scores, const IndexMask& mask, double scale);

/// Divides each stored entry by its row sum. Support unchanged.
RowSparseMatrix row_normalize(const RowSparseMatrix& m);

enum class FillDistribution { Uniform, Gaussian };

/// Deterministic fill from mt19937_64 seeded with `seed`, entries drawn
/// row-major. Uniform draws from (-s, s), Gaussian from N(0, s^2).
Matrix seeded_fill(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                   FillDistribution dist, double s = 1.0);

}  // namespace pfa

#endif
