#include <doctest.h>

#include "pfa/window.hpp"

using namespace pfa;

namespace {

FeatureMap random_map(std::int64_t h, std::int64_t w, std::int64_t c, std::uint64_t seed) {
    FeatureMap f(h, w, c);
    f.values = seeded_fill(h * w, c, seed, FillDistribution::Uniform);
    return f;
}

bool identical(const FeatureMap& a, const FeatureMap& b) {
    return a.h == b.h && a.w == b.w && a.c == b.c && (a.values.array() == b.values.array()).all();
}

}  // namespace

TEST_CASE("partition tiling arithmetic") {
    const FeatureMap f = random_map(64, 64, 3, 1);
    const WindowBatch b = partition(f, 32, {0, 0});
    CHECK(b.num_windows == 4);
    CHECK(b.tokens_per_window == 1024);

    const FeatureMap g = random_map(32, 32, 2, 2);
    const WindowBatch single = partition(g, 32, {0, 0});
    CHECK(single.num_windows == 1);
    // row-major pixel order inside the window
    for (std::int64_t t = 0; t < 32 * 32; ++t) {
        CHECK((single.windows[0].row(t).array() == g.values.row(t).array()).all());
    }
}

TEST_CASE("partition pads to window multiples and merge restores the original") {
    const FeatureMap f = random_map(48, 48, 2, 3);
    const WindowBatch b = partition(f, 32, {0, 0});
    CHECK(b.padded_h == 64);
    CHECK(b.padded_w == 64);
    CHECK(b.num_windows == 4);
    CHECK(identical(merge(b), f));
}

TEST_CASE("partition/merge round-trip is bit-exact for all shifts and sizes") {
    const std::int64_t W = 8;
    std::uint64_t seed = 10;
    for (std::int64_t h = W; h <= 3 * W; h += 3) {
        for (std::int64_t w = W; w <= 3 * W; w += 5) {
            const FeatureMap f = random_map(h, w, 4, seed++);
            for (const Shift s : {Shift{0, 0}, Shift{W / 2, W / 2}, Shift{3, 5}}) {
                CHECK(identical(merge(partition(f, W, s)), f));
            }
        }
    }
}

TEST_CASE("parity_shift defines the two pathways") {
    CHECK(parity_shift(1, 32) == Shift{0, 0});
    CHECK(parity_shift(2, 32) == Shift{16, 16});
    CHECK(parity_shift(3, 32) == Shift{0, 0});
    CHECK(parity_shift(4, 16) == Shift{8, 8});
    CHECK_THROWS_AS(parity_shift(0, 32), std::invalid_argument);
}

TEST_CASE("layers of equal parity produce identical tilings") {
    const FeatureMap f = random_map(24, 24, 2, 77);
    const WindowBatch l1 = partition(f, 8, parity_shift(1, 8));
    const WindowBatch l3 = partition(f, 8, parity_shift(3, 8));
    REQUIRE(l1.num_windows == l3.num_windows);
    for (std::size_t i = 0; i < l1.windows.size(); ++i) {
        CHECK((l1.windows[i].array() == l3.windows[i].array()).all());
    }
    const WindowBatch l2 = partition(f, 8, parity_shift(2, 8));
    const WindowBatch l4 = partition(f, 8, parity_shift(4, 8));
    for (std::size_t i = 0; i < l2.windows.size(); ++i) {
        CHECK((l2.windows[i].array() == l4.windows[i].array()).all());
    }
}
