#ifndef PFA_CASCADE_HPP
#define PFA_CASCADE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pfa/attention.hpp"
#include "pfa/window.hpp"

namespace pfa {

struct BlockSpec {
    std::int64_t layers = 0;
    std::int64_t k_retained = 0;
};

enum class FocusMode { PerBlockList, Geometric };

struct ModelPreset {
    std::string name;
    std::vector<BlockSpec> blocks;
    std::int64_t heads = 0;
    std::int64_t channels = 0;
    std::int64_t window_size = 0;
    FocusMode focus_mode = FocusMode::PerBlockList;
    double alpha = 0.5;  // geometric mode only

    std::int64_t head_dim() const { return channels / heads; }
    std::int64_t total_layers() const {
        std::int64_t n = 0;
        for (const auto& b : blocks) n += b.layers;
        return n;
    }
};

/// Per-layer projection matrices, seeded (the trained weights are replaced
/// by deterministic random projections).
struct LayerProjections {
    Matrix w_q, w_k, w_v, w_o;  // each C x C
};

struct LayerWeights {
    std::vector<LayerProjections> layers;
};

enum class Variant { Vanilla, TopK, Progressive, Pfa };

/// Aggregated per-(window, head) trace entry for one layer.
struct CellTrace {
    std::int64_t rows = 0;
    std::uint64_t support_total = 0;
    std::int64_t support_max = 0;
    double entropy_sum = 0.0;  // natural log, rows renormalized for the statistic
    double rowsum_min = 0.0;
    double rowsum_max = 0.0;
    std::uint64_t score_macs = 0;
    std::uint64_t aggregate_macs = 0;
    double overlap_fraction = 1.0;  // |support(A^l) ∩ support(parent)| / |support(A^l)|
};

struct LayerTrace {
    std::int64_t layer = 0;  // 1-based global index
    int parity = 1;          // 1 odd (unshifted), 0 even (shifted)
    Shift shift;
    std::int64_t k_l = 0;
    std::int64_t num_windows = 0;
    std::int64_t tokens = 0;  // per window
    std::uint64_t projection_macs = 0;
    std::vector<CellTrace> cells;           // indexed window * heads + head
    std::vector<SparseEntry> probed_row;    // attention row captured for export
};

/// Selects one (window, head, row) whose attention weights are captured
/// per layer into LayerTrace::probed_row. window < 0 disables capture.
struct RowProbe {
    std::int64_t window = -1;
    std::int64_t head = 0;
    std::int64_t row = 0;
};

struct CascadeTrace {
    std::int64_t h = 0, w = 0, channels = 0, window_size = 0, heads = 0;
    Variant variant = Variant::Pfa;
    std::vector<LayerTrace> layers;
};

struct CascadeResult {
    FeatureMap output;
    CascadeTrace trace;
};

/// pft / pft_light structural presets, or a validated custom preset.
std::pair<ModelPreset, LayerWeights> build_preset(const std::string& name, std::uint64_t seed);
std::pair<ModelPreset, LayerWeights> build_custom_preset(ModelPreset preset, std::uint64_t seed);

/// Validates ModelPreset invariants; throws listing the violated one.
void validate_preset(const ModelPreset& preset);

/// Retained-entry budget for a 1-based global layer index.
std::int64_t k_for_layer(const ModelPreset& preset, std::int64_t global_layer);

/// Runs the full layer stack: partition by parity shift, project q/k/v per
/// window, dispatch the variant per head, residual-add, merge. Chains for
/// pfa/progressive are keyed by parity and persist across block boundaries.
CascadeResult run_cascade(const ModelPreset& preset, const LayerWeights& weights,
                          const FeatureMap& f, Variant variant,
                          bool renormalize_after_topk = false, int threads = 1,
                          RowProbe probe = {});

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

}  // namespace pfa

#endif
