// Independent brute-force oracles for differential testing. Everything
// here is coded from the definitions with plain loops and stays off the
// library's sparse kernels.
#ifndef PFA_TESTS_ORACLES_HPP
#define PFA_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pfa/dense.hpp"

namespace oracle {

using pfa::Matrix;

// kij loop order, deliberately different from the library's ikj.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows(), b.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    return out;
}

// Dense softmax restricted to mask != 0; masked-out entries come back 0.
inline Matrix masked_softmax(const Matrix& scores, const Matrix& mask, double scale) {
    Matrix out = Matrix::Zero(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (mask(i, j) != 0.0) mx = std::max(mx, scale * scores(i, j));
        double sum = 0.0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            if (mask(i, j) != 0.0) {
                out(i, j) = std::exp(scale * scores(i, j) - mx);
                sum += out(i, j);
            }
        }
        for (Eigen::Index j = 0; j < scores.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

struct DenseChain {
    Matrix a;     // attention map, zeros off support
    Matrix mask;  // 0/1
};

inline DenseChain full_chain(Eigen::Index n) {
    DenseChain c;
    c.a = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    c.mask = Matrix::Ones(n, n);
    return c;
}

// One focused step replayed densely with explicit masks: masked softmax,
// elementwise inheritance, row normalization over the support, top-k with
// lower-column tie-break, Sign.
inline DenseChain focused_step(const Matrix& q, const Matrix& k, const Matrix& v,
                               const DenseChain& prev, Eigen::Index k_l, bool renorm,
                               Matrix* output) {
    const Eigen::Index n = q.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    const Matrix sm = masked_softmax(matmul(q, k.transpose()), prev.mask, scale);
    DenseChain next;
    next.a = Matrix::Zero(n, n);
    next.mask = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> support;
        double psum = 0.0;
        std::vector<double> prod(static_cast<std::size_t>(n), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (prev.mask(i, j) != 0.0) {
                prod[static_cast<std::size_t>(j)] = sm(i, j) * prev.a(i, j);
                psum += prod[static_cast<std::size_t>(j)];
                support.push_back(j);
            }
        }
        for (Eigen::Index j : support) prod[static_cast<std::size_t>(j)] /= psum;
        std::stable_sort(support.begin(), support.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (prod[static_cast<std::size_t>(a)] != prod[static_cast<std::size_t>(b)])
                return prod[static_cast<std::size_t>(a)] > prod[static_cast<std::size_t>(b)];
            return a < b;
        });
        if (static_cast<Eigen::Index>(support.size()) > k_l)
            support.resize(static_cast<std::size_t>(k_l));
        double ksum = 0.0;
        for (Eigen::Index j : support) ksum += prod[static_cast<std::size_t>(j)];
        for (Eigen::Index j : support) {
            next.a(i, j) = renorm ? prod[static_cast<std::size_t>(j)] / ksum
                                  : prod[static_cast<std::size_t>(j)];
            next.mask(i, j) = 1.0;
        }
    }
    if (output) *output = matmul(next.a, v);
    return next;
}

}  // namespace oracle

#endif
