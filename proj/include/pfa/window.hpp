#ifndef PFA_WINDOW_HPP
#define PFA_WINDOW_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pfa/dense.hpp"

namespace pfa {

/// h x w x c feature map, channel-last: values row i*w + j holds pixel (i, j).
struct FeatureMap {
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::int64_t c = 0;
    Matrix values;  // (h*w) x c

    FeatureMap() = default;
    FeatureMap(std::int64_t h_, std::int64_t w_, std::int64_t c_)
        : h(h_), w(w_), c(c_), values(Matrix::Zero(h_ * w_, c_)) {}
};

struct Shift {
    std::int64_t dy = 0;
    std::int64_t dx = 0;
    friend bool operator==(const Shift&, const Shift&) = default;
};

/// Non-overlapping W x W token windows cut from a (possibly padded and
/// cyclically shifted) feature map. Token order within a window is
/// row-major; windows themselves are row-major over the tiling.
struct WindowBatch {
    std::int64_t window_size = 0;
    std::int64_t num_windows = 0;
    std::int64_t tokens_per_window = 0;  // window_size^2
    Shift shift;
    std::int64_t orig_h = 0, orig_w = 0;
    std::int64_t padded_h = 0, padded_w = 0;
    std::int64_t channels = 0;
    std::vector<Matrix> windows;  // each tokens_per_window x channels
};

/// Reflection-pads bottom/right to multiples of W, applies the cyclic
/// shift, cuts into windows.
WindowBatch partition(const FeatureMap& f, std::int64_t window_size, Shift shift);

/// Exact inverse of partition: un-window, un-shift, strip padding.
FeatureMap merge(const WindowBatch& b);

/// The two parity pathways: odd layers (1-based) unshifted, even layers
/// shifted by (W/2, W/2).
Shift parity_shift(std::int64_t layer_index, std::int64_t window_size);

}  // namespace pfa

#endif
