#include "pfa/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace pfa {

namespace {

Matrix gaussian_matrix(std::mt19937_64& rng, std::int64_t n, double s) {
    std::normal_distribution<double> d(0.0, s);
    Matrix m(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) m(i, j) = d(rng);
    return m;
}

LayerWeights seeded_weights(const ModelPreset& preset, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(preset.channels));
    LayerWeights w;
    w.layers.reserve(static_cast<std::size_t>(preset.total_layers()));
    for (std::int64_t l = 0; l < preset.total_layers(); ++l) {
        LayerProjections p;
        p.w_q = gaussian_matrix(rng, preset.channels, s);
        p.w_k = gaussian_matrix(rng, preset.channels, s);
        p.w_v = gaussian_matrix(rng, preset.channels, s);
        p.w_o = gaussian_matrix(rng, preset.channels, s);
        w.layers.push_back(std::move(p));
    }
    return w;
}

void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int t = static_cast<int>(std::min<std::int64_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));
    for (int id = 0; id < t; ++id) {
        pool.emplace_back([&, id] {
            try {
                for (std::int64_t i = id; i < n; i += t) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(id)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct ChainCell {
    bool initialized = false;
    RowSparseMatrix a;
    IndexMask i;
};

double row_entropy(const std::vector<SparseEntry>& row) {
    double sum = 0.0;
    for (const auto& e : row) sum += e.weight;
    double h = 0.0;
    for (const auto& e : row) {
        const double p = e.weight / sum;
        h -= p * std::log(p);
    }
    return h;
}

CellTrace trace_cell(const RowSparseMatrix& map, const RowSparseMatrix* parent,
                     std::uint64_t score_macs, std::uint64_t aggregate_macs) {
    CellTrace c;
    c.rows = map.rows;
    c.score_macs = score_macs;
    c.aggregate_macs = aggregate_macs;
    c.rowsum_min = std::numeric_limits<double>::infinity();
    c.rowsum_max = -std::numeric_limits<double>::infinity();
    std::uint64_t overlap = 0;
    for (std::int64_t r = 0; r < map.rows; ++r) {
        const auto& row = map.row_entries[static_cast<std::size_t>(r)];
        c.support_total += row.size();
        c.support_max = std::max<std::int64_t>(c.support_max, static_cast<std::int64_t>(row.size()));
        double sum = 0.0;
        for (const auto& e : row) sum += e.weight;
        c.rowsum_min = std::min(c.rowsum_min, sum);
        c.rowsum_max = std::max(c.rowsum_max, sum);
        c.entropy_sum += row_entropy(row);
        if (parent) {
            const auto& prow = parent->row_entries[static_cast<std::size_t>(r)];
            std::size_t p = 0;
            for (const auto& e : row) {
                while (p < prow.size() && prow[p].col < e.col) ++p;
                if (p < prow.size() && prow[p].col == e.col) ++overlap;
            }
        }
    }
    c.overlap_fraction =
        parent ? static_cast<double>(overlap) / static_cast<double>(c.support_total) : 1.0;
    return c;
}

}  // namespace

void validate_preset(const ModelPreset& preset) {
    if (preset.blocks.empty()) throw std::invalid_argument("preset: needs at least one block");
    if (preset.heads < 1) throw std::invalid_argument("preset: heads must be >= 1");
    if (preset.channels < 1) throw std::invalid_argument("preset: channels must be >= 1");
    if (preset.channels % preset.heads != 0) {
        throw std::invalid_argument("preset: channels (" + std::to_string(preset.channels) +
                                    ") not divisible by heads (" + std::to_string(preset.heads) + ")");
    }
    if (preset.window_size < 2) throw std::invalid_argument("preset: window_size must be >= 2");
    std::int64_t prev_k = std::numeric_limits<std::int64_t>::max();
    for (const auto& b : preset.blocks) {
        if (b.layers < 1) throw std::invalid_argument("preset: block layer count must be >= 1");
        if (preset.focus_mode == FocusMode::PerBlockList) {
            if (b.k_retained < 1) throw std::invalid_argument("preset: K values must be positive");
            if (b.k_retained > prev_k) {
                throw std::invalid_argument("preset: K values must be nonincreasing across blocks");
            }
            prev_k = b.k_retained;
        }
    }
    if (preset.focus_mode == FocusMode::Geometric &&
        !(preset.alpha > 0.0 && preset.alpha < 1.0)) {
        throw std::invalid_argument("preset: alpha must lie in (0, 1)");
    }
}

std::pair<ModelPreset, LayerWeights> build_custom_preset(ModelPreset preset, std::uint64_t seed) {
    validate_preset(preset);
    LayerWeights w = seeded_weights(preset, seed);
    return {std::move(preset), std::move(w)};
}

std::pair<ModelPreset, LayerWeights> build_preset(const std::string& name, std::uint64_t seed) {
    ModelPreset p;
    p.name = name;
    if (name == "pft") {
        p.blocks = {{4, 1024}, {4, 256}, {4, 128}, {6, 64}, {6, 32}, {6, 16}};
        p.heads = 6;
        p.channels = 240;
        p.window_size = 32;
    } else if (name == "pft_light") {
        p.blocks = {{2, 1024}, {4, 256}, {6, 128}, {6, 64}, {6, 32}};
        p.heads = 4;
        p.channels = 52;
        p.window_size = 32;
    } else {
        throw std::invalid_argument("build_preset: unknown preset '" + name + "'");
    }
    return build_custom_preset(std::move(p), seed);
}

std::int64_t k_for_layer(const ModelPreset& preset, std::int64_t global_layer) {
    if (global_layer < 1 || global_layer > preset.total_layers()) {
        throw std::invalid_argument("k_for_layer: layer index out of range");
    }
    if (preset.focus_mode == FocusMode::PerBlockList) {
        std::int64_t remaining = global_layer;
        for (const auto& b : preset.blocks) {
            if (remaining <= b.layers) return b.k_retained;
            remaining -= b.layers;
        }
        throw std::logic_error("k_for_layer: unreachable");
    }
    // geometric: K^1 = N, K^l = round(N * alpha^(l-1)), floored at 1
    const std::int64_t n = preset.window_size * preset.window_size;
    const double k = static_cast<double>(n) * std::pow(preset.alpha, static_cast<double>(global_layer - 1));
    return std::max<std::int64_t>(1, std::llround(k));
}

Variant variant_from_string(const std::string& s) {
    if (s == "vanilla") return Variant::Vanilla;
    if (s == "topk") return Variant::TopK;
    if (s == "progressive") return Variant::Progressive;
    if (s == "pfa") return Variant::Pfa;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::Vanilla: return "vanilla";
        case Variant::TopK: return "topk";
        case Variant::Progressive: return "progressive";
        case Variant::Pfa: return "pfa";
    }
    return "?";
}

CascadeResult run_cascade(const ModelPreset& preset, const LayerWeights& weights,
                          const FeatureMap& f, Variant variant,
                          bool renormalize_after_topk, int threads, RowProbe probe) {
    validate_preset(preset);
    if (f.c != preset.channels) {
        throw std::invalid_argument("run_cascade: feature map channels (" + std::to_string(f.c) +
                                    ") do not match preset (" + std::to_string(preset.channels) + ")");
    }
    const std::int64_t total = preset.total_layers();
    if (static_cast<std::int64_t>(weights.layers.size()) != total) {
        throw std::invalid_argument("run_cascade: weights do not cover all layers");
    }
    const std::int64_t heads = preset.heads;
    const std::int64_t dh = preset.head_dim();
    const std::int64_t c = preset.channels;

    CascadeResult res;
    res.trace.h = f.h;
    res.trace.w = f.w;
    res.trace.channels = c;
    res.trace.window_size = preset.window_size;
    res.trace.heads = heads;
    res.trace.variant = variant;

    // parity-keyed inheritance state, index [parity][window*heads + head]
    std::vector<ChainCell> chains[2];

    FeatureMap x = f;
    for (std::int64_t layer = 1; layer <= total; ++layer) {
        const Shift shift = parity_shift(layer, preset.window_size);
        WindowBatch batch = partition(x, preset.window_size, shift);
        const std::int64_t n = batch.tokens_per_window;
        const std::int64_t k_l = std::min(k_for_layer(preset, layer), n);
        const int parity = layer % 2 == 1 ? 1 : 0;
        auto& chain = chains[parity];
        const std::size_t cells_needed = static_cast<std::size_t>(batch.num_windows * heads);
        if (chain.empty()) {
            chain.resize(cells_needed);
        } else if (chain.size() != cells_needed) {
            throw std::runtime_error("run_cascade: window layout changed mid-run");
        }

        LayerTrace lt;
        lt.layer = layer;
        lt.parity = parity;
        lt.shift = shift;
        lt.k_l = k_l;
        lt.num_windows = batch.num_windows;
        lt.tokens = n;
        lt.projection_macs = 4ull * static_cast<std::uint64_t>(batch.num_windows * n) *
                             static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(c);
        lt.cells.resize(cells_needed);

        const LayerProjections& proj = weights.layers[static_cast<std::size_t>(layer - 1)];
        std::vector<Matrix> out_windows(static_cast<std::size_t>(batch.num_windows));

        parallel_for(batch.num_windows, threads, [&](std::int64_t win) {
            const Matrix& tokens = batch.windows[static_cast<std::size_t>(win)];
            const Matrix q = tokens * proj.w_q;
            const Matrix k = tokens * proj.w_k;
            const Matrix v = tokens * proj.w_v;
            Matrix concat(n, c);
            for (std::int64_t h = 0; h < heads; ++h) {
                AttentionInputs in{q.middleCols(h * dh, dh), k.middleCols(h * dh, dh),
                                   v.middleCols(h * dh, dh)};
                const std::size_t cell = static_cast<std::size_t>(win * heads + h);
                ChainCell& state = chain[cell];
                CellTrace trace;
                const bool probed = probe.window == win && probe.head == h;
                auto capture = [&](const RowSparseMatrix& map) {
                    if (probed && probe.row >= 0 && probe.row < map.rows) {
                        lt.probed_row = map.row_entries[static_cast<std::size_t>(probe.row)];
                    }
                };
                switch (variant) {
                    case Variant::Vanilla: {
                        AttentionResult r = vanilla_attention(in);
                        capture(r.map);
                        const std::uint64_t dense_macs =
                            static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) *
                            static_cast<std::uint64_t>(dh);
                        trace = trace_cell(r.map, nullptr, dense_macs, dense_macs);
                        concat.middleCols(h * dh, dh) = r.output;
                        break;
                    }
                    case Variant::TopK: {
                        AttentionResult r = topk_attention(in, k_l);
                        capture(r.map);
                        const std::uint64_t score_macs =
                            static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) *
                            static_cast<std::uint64_t>(dh);
                        const std::uint64_t agg_macs =
                            static_cast<std::uint64_t>(r.map.nnz()) * static_cast<std::uint64_t>(dh);
                        trace = trace_cell(r.map, nullptr, score_macs, agg_macs);
                        concat.middleCols(h * dh, dh) = r.output;
                        break;
                    }
                    case Variant::Progressive: {
                        const RowSparseMatrix previous =
                            state.initialized ? state.a : uniform_full(n);
                        AttentionResult r = progressive_attention_step(in, previous);
                        capture(r.map);
                        const std::uint64_t score_macs =
                            static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) *
                            static_cast<std::uint64_t>(dh);
                        const std::uint64_t agg_macs =
                            static_cast<std::uint64_t>(r.map.nnz()) * static_cast<std::uint64_t>(dh);
                        trace = trace_cell(r.map, state.initialized ? &state.a : nullptr,
                                           score_macs, agg_macs);
                        state.a = std::move(r.map);
                        state.initialized = true;
                        concat.middleCols(h * dh, dh) = r.output;
                        break;
                    }
                    case Variant::Pfa: {
                        const RowSparseMatrix previous =
                            state.initialized ? std::move(state.a) : uniform_full(n);
                        const IndexMask prev_mask =
                            state.initialized ? std::move(state.i) : IndexMask::full(n, n);
                        PfaStepResult r =
                            pfa_step(in, previous, prev_mask, k_l, renormalize_after_topk);
                        capture(r.attention);
                        trace = trace_cell(r.attention, state.initialized ? &previous : nullptr,
                                           r.macs_scores, r.macs_aggregate);
                        state.a = std::move(r.attention);
                        state.i = std::move(r.mask);
                        state.initialized = true;
                        concat.middleCols(h * dh, dh) = r.output;
                        break;
                    }
                }
                lt.cells[cell] = std::move(trace);
            }
            out_windows[static_cast<std::size_t>(win)] = tokens + concat * proj.w_o;
        });

        batch.windows = std::move(out_windows);
        x = merge(batch);
        res.trace.layers.push_back(std::move(lt));
    }
    res.output = std::move(x);
    return res;
}

}  // namespace pfa
