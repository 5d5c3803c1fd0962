#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pfa/sparse.hpp"

using namespace pfa;

namespace {

IndexMask random_mask(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols, double density) {
    IndexMask m(rows, cols);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::int64_t i = 0; i < rows; ++i) {
        auto& row = m.row_cols[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < cols; ++j)
            if (u(rng) < density) row.push_back(j);
        if (row.empty()) row.push_back(static_cast<std::int64_t>(rng() % cols));
    }
    return m;
}

}  // namespace

TEST_CASE("smm_scores with a full mask equals the dense product") {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 30; ++it) {
        const std::int64_t n = 4 + static_cast<std::int64_t>(rng() % 61);
        const std::int64_t d = 2 + static_cast<std::int64_t>(rng() % 15);
        const Matrix q = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
        const Matrix k = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
        const auto res = smm_scores(q, k, IndexMask::full(n, n));
        const Matrix dense = oracle::matmul(q, k.transpose());
        CHECK((densify(res.scores) - dense).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(res.macs == static_cast<std::uint64_t>(n * n * d));
    }
}

TEST_CASE("smm_scores one set column per row") {
    const std::int64_t n = 8, d = 4;
    const Matrix q = seeded_fill(n, d, 1, FillDistribution::Gaussian);
    const Matrix k = seeded_fill(n, d, 2, FillDistribution::Gaussian);
    IndexMask m(n, n);
    for (std::int64_t i = 0; i < n; ++i) m.row_cols[static_cast<std::size_t>(i)] = {(i + 3) % n};
    const auto res = smm_scores(q, k, m);
    CHECK(res.scores.nnz() == static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& e = res.scores.row_entries[static_cast<std::size_t>(i)][0];
        CHECK(e.weight == doctest::Approx(q.row(i).dot(k.row(e.col))).epsilon(1e-12));
    }
}

TEST_CASE("smm_scores density 0.25 vs dense-then-mask oracle, MACs exact") {
    std::mt19937_64 rng(22);
    const std::int64_t n = 32, d = 8;
    const Matrix q = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
    const Matrix k = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
    const IndexMask m = random_mask(rng, n, n, 0.25);
    const auto res = smm_scores(q, k, m);
    const Matrix dense = oracle::matmul(q, k.transpose());
    for (std::int64_t i = 0; i < n; ++i) {
        CHECK(res.scores.row_entries[static_cast<std::size_t>(i)].size() ==
              m.row_cols[static_cast<std::size_t>(i)].size());
        for (const auto& e : res.scores.row_entries[static_cast<std::size_t>(i)]) {
            CHECK(std::abs(e.weight - dense(i, e.col)) <= 1e-12);
        }
    }
    CHECK(res.macs == m.nnz() * static_cast<std::uint64_t>(d));
}

TEST_CASE("smm_aggregate identity and two-entry rows") {
    const std::int64_t n = 5;
    RowSparseMatrix id(n, n);
    for (std::int64_t i = 0; i < n; ++i) id.row_entries[static_cast<std::size_t>(i)] = {{i, 1.0}};
    const Matrix v = seeded_fill(n, 3, 9, FillDistribution::Gaussian);
    const auto res = smm_aggregate(id, v, sign_mask(id));
    CHECK((res.output - v).cwiseAbs().maxCoeff() == 0.0);

    RowSparseMatrix a(1, 2);
    a.row_entries[0] = {{0, 0.5}, {1, 0.5}};
    Matrix v2(2, 2);
    v2 << 2, 4, 6, 8;
    const auto res2 = smm_aggregate(a, v2, sign_mask(a));
    CHECK(res2.output(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(res2.output(0, 1) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("smm_aggregate random sparse vs densify-and-multiply oracle") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 20; ++it) {
        const std::int64_t n = 8 + static_cast<std::int64_t>(rng() % 25);
        const std::int64_t d = 2 + static_cast<std::int64_t>(rng() % 7);
        const IndexMask m = random_mask(rng, n, n, 0.3);
        RowSparseMatrix a(n, n);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t c : m.row_cols[static_cast<std::size_t>(i)])
                a.row_entries[static_cast<std::size_t>(i)].push_back({c, u(rng)});
        const Matrix v = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
        const auto res = smm_aggregate(a, v, m);
        CHECK((res.output - oracle::matmul(densify(a), v)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(res.macs == a.nnz() * static_cast<std::uint64_t>(d));
    }
}

TEST_CASE("smm_aggregate rejects support mismatch") {
    RowSparseMatrix a(1, 3);
    a.row_entries[0] = {{0, 0.5}, {2, 0.5}};
    IndexMask m(1, 3);
    m.row_cols[0] = {0, 1};
    const Matrix v = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(smm_aggregate(a, v, m), std::invalid_argument);
}

TEST_CASE("topk_rows spec rows") {
    RowSparseMatrix m(1, 4);
    m.row_entries[0] = {{0, 0.1}, {1, 0.4}, {2, 0.2}, {3, 0.3}};
    auto r = topk_rows(m, 2);
    REQUIRE(r.row_entries[0].size() == 2);
    CHECK(r.row_entries[0][0] == SparseEntry{1, 0.4});
    CHECK(r.row_entries[0][1] == SparseEntry{3, 0.3});

    r = topk_rows(m, 10);
    CHECK(r.row_entries[0] == m.row_entries[0]);

    RowSparseMatrix ties(1, 3);
    ties.row_entries[0] = {{0, 0.5}, {1, 0.5}, {2, 0.5}};
    r = topk_rows(ties, 2);
    REQUIRE(r.row_entries[0].size() == 2);
    CHECK(r.row_entries[0][0].col == 0);
    CHECK(r.row_entries[0][1].col == 1);
}

TEST_CASE("topk_rows support size is min(k, nnz)") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 50; ++it) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 32);
        RowSparseMatrix m(1, n);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (std::int64_t j = 0; j < n; ++j)
            if (rng() % 3 || j == 0) m.row_entries[0].push_back({j, u(rng)});
        const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 32);
        const auto r = topk_rows(m, k);
        CHECK(r.row_entries[0].size() ==
              std::min<std::size_t>(static_cast<std::size_t>(k), m.row_entries[0].size()));
    }
}

TEST_CASE("sign_mask mirrors support and rejects empty rows") {
    RowSparseMatrix m(1, 5);
    m.row_entries[0] = {{1, 0.7}, {3, 0.3}};
    const IndexMask mask = sign_mask(m);
    CHECK(mask.row_cols[0] == std::vector<std::int64_t>{1, 3});

    const RowSparseMatrix full = uniform_full(6);
    const IndexMask fm = sign_mask(full);
    CHECK(fm.row_cols[0].size() == 6);

    const auto k2 = sign_mask(topk_rows(full, 2));
    CHECK(k2.row_cols[0].size() == 2);

    RowSparseMatrix empty(2, 2);
    empty.row_entries[0] = {{0, 1.0}};
    CHECK_THROWS_AS(sign_mask(empty), std::invalid_argument);
}

TEST_CASE("hadamard_rownorm spec rows") {
    RowSparseMatrix prev(1, 4), cur(1, 4);
    prev.row_entries[0] = {{0, 0.5}, {1, 0.5}};
    cur.row_entries[0] = {{0, 0.5}, {1, 0.5}};
    auto r = hadamard_rownorm(cur, prev);
    CHECK(r.row_entries[0][0].weight == doctest::Approx(0.5).epsilon(1e-12));

    prev.row_entries[0] = {{0, 0.8}, {1, 0.2}};
    cur.row_entries[0] = {{0, 0.5}, {1, 0.5}};
    r = hadamard_rownorm(cur, prev);
    CHECK(r.row_entries[0][0].weight == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.row_entries[0][1].weight == doctest::Approx(0.2).epsilon(1e-12));

    cur.row_entries[0] = {{0, 0.8}, {1, 0.2}};
    r = hadamard_rownorm(cur, prev);
    CHECK(r.row_entries[0][0].weight == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
    CHECK(r.row_entries[0][1].weight == doctest::Approx(1.0 / 17.0).epsilon(1e-12));
}

TEST_CASE("hadamard_rownorm rejects support violations") {
    RowSparseMatrix prev(1, 4), cur(1, 4);
    prev.row_entries[0] = {{0, 0.5}, {1, 0.5}};
    cur.row_entries[0] = {{0, 0.5}, {2, 0.5}};
    CHECK_THROWS_AS(hadamard_rownorm(cur, prev), std::invalid_argument);
}

TEST_CASE("repeated inheritance follows the elementwise power law") {
    // l applications of the same map C from a uniform start give rows
    // proportional to C^l elementwise
    std::mt19937_64 rng(41);
    for (int it = 0; it < 10; ++it) {
        const std::int64_t n = 6;
        Matrix scores = seeded_fill(n, n, rng(), FillDistribution::Gaussian, 2.0);
        const RowSparseMatrix c = masked_softmax_rows(scores, IndexMask::full(n, n), 1.0);
        RowSparseMatrix acc = uniform_full(n);
        for (int l = 1; l <= 6; ++l) {
            acc = hadamard_rownorm(c, acc);
            const Matrix cd = densify(c);
            for (std::int64_t i = 0; i < n; ++i) {
                Eigen::VectorXd expect(n);
                for (std::int64_t j = 0; j < n; ++j) expect(j) = std::pow(cd(i, j), l);
                expect /= expect.sum();
                for (const auto& e : acc.row_entries[static_cast<std::size_t>(i)]) {
                    CHECK(std::abs(e.weight - expect(e.col)) <= 1e-9);
                }
            }
        }
    }
}
