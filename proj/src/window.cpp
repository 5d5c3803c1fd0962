#include "pfa/window.hpp"

#include <stdexcept>
#include <string>

namespace pfa {

namespace {

// Reflection index for bottom/right padding (no repeated edge pixel).
std::int64_t reflect(std::int64_t i, std::int64_t n) {
    if (i < n) return i;
    const std::int64_t over = i - n;
    return n - 2 - over >= 0 ? n - 2 - over : 0;
}

std::int64_t mod(std::int64_t a, std::int64_t n) {
    const std::int64_t r = a % n;
    return r < 0 ? r + n : r;
}

}  // namespace

WindowBatch partition(const FeatureMap& f, std::int64_t window_size, Shift shift) {
    if (window_size < 2) throw std::invalid_argument("partition: window_size must be >= 2");
    const std::int64_t ph = ((f.h + window_size - 1) / window_size) * window_size;
    const std::int64_t pw = ((f.w + window_size - 1) / window_size) * window_size;

    WindowBatch b;
    b.window_size = window_size;
    b.tokens_per_window = window_size * window_size;
    b.shift = shift;
    b.orig_h = f.h;
    b.orig_w = f.w;
    b.padded_h = ph;
    b.padded_w = pw;
    b.channels = f.c;
    b.num_windows = (ph / window_size) * (pw / window_size);
    b.windows.reserve(static_cast<std::size_t>(b.num_windows));

    const std::int64_t wy = pw / window_size;
    for (std::int64_t win = 0; win < b.num_windows; ++win) {
        const std::int64_t wr = win / wy;
        const std::int64_t wc = win % wy;
        Matrix tokens(b.tokens_per_window, f.c);
        for (std::int64_t t = 0; t < b.tokens_per_window; ++t) {
            // padded-and-shifted coordinates, then back into the source map
            const std::int64_t sy = wr * window_size + t / window_size;
            const std::int64_t sx = wc * window_size + t % window_size;
            const std::int64_t py = mod(sy + shift.dy, ph);
            const std::int64_t px = mod(sx + shift.dx, pw);
            const std::int64_t y = reflect(py, f.h);
            const std::int64_t x = reflect(px, f.w);
            tokens.row(t) = f.values.row(y * f.w + x);
        }
        b.windows.push_back(std::move(tokens));
    }
    return b;
}

FeatureMap merge(const WindowBatch& b) {
    FeatureMap f(b.orig_h, b.orig_w, b.channels);
    const std::int64_t wy = b.padded_w / b.window_size;
    for (std::int64_t win = 0; win < b.num_windows; ++win) {
        const std::int64_t wr = win / wy;
        const std::int64_t wc = win % wy;
        const Matrix& tokens = b.windows[static_cast<std::size_t>(win)];
        for (std::int64_t t = 0; t < b.tokens_per_window; ++t) {
            const std::int64_t sy = wr * b.window_size + t / b.window_size;
            const std::int64_t sx = wc * b.window_size + t % b.window_size;
            const std::int64_t py = mod(sy + b.shift.dy, b.padded_h);
            const std::int64_t px = mod(sx + b.shift.dx, b.padded_w);
            if (py < b.orig_h && px < b.orig_w) {
                f.values.row(py * b.orig_w + px) = tokens.row(t);
            }
        }
    }
    return f;
}

Shift parity_shift(std::int64_t layer_index, std::int64_t window_size) {
    if (layer_index < 1) throw std::invalid_argument("parity_shift: layer_index is 1-based");
    if (layer_index % 2 == 1) return {0, 0};
    return {window_size / 2, window_size / 2};
}

}  // namespace pfa
