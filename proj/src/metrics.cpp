#include "pfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pfa {

namespace {

std::uint64_t u(std::int64_t v) { return static_cast<std::uint64_t>(v); }

std::int64_t geometric_k(std::int64_t n, double alpha, std::int64_t layer) {
    const double k = static_cast<double>(n) * std::pow(alpha, static_cast<double>(layer - 1));
    return std::max<std::int64_t>(1, std::llround(k));
}

}  // namespace

std::uint64_t omega_sa(const CostModelInput& in) {
    const std::uint64_t hw = u(in.h) * u(in.w);
    const std::uint64_t c = u(in.channels);
    const std::uint64_t w2 = u(in.window_size) * u(in.window_size);
    const std::uint64_t l = u(in.layers);
    return 4 * hw * l * c * c + 2 * w2 * hw * l * c;
}

std::uint64_t omega_pfa(const CostModelInput& in) {
    if (in.mode == CostMode::Sa) throw std::invalid_argument("omega_pfa: mode is sa");
    const std::uint64_t hw = u(in.h) * u(in.w);
    const std::uint64_t c = u(in.channels);
    const std::int64_t n = in.window_size * in.window_size;
    if (in.mode == CostMode::PfaSchedule &&
        static_cast<std::int64_t>(in.k_schedule.size()) != in.layers) {
        throw std::invalid_argument("omega_pfa: schedule length must equal layer count");
    }
    std::uint64_t total = 0;
    for (std::int64_t l = 1; l <= in.layers; ++l) {
        const std::int64_t k = in.mode == CostMode::PfaGeometric
                                   ? geometric_k(n, in.alpha, l)
                                   : in.k_schedule[static_cast<std::size_t>(l - 1)];
        total += 4 * hw * c * c + 2 * u(k) * hw * c;
    }
    return total;
}

MacReport reconcile(const CascadeTrace& trace, const CostModelInput& in) {
    if (trace.h != in.h || trace.w != in.w || trace.channels != in.channels ||
        trace.window_size != in.window_size ||
        static_cast<std::int64_t>(trace.layers.size()) != in.layers) {
        throw std::invalid_argument("reconcile: trace geometry does not match cost-model input");
    }
    const std::int64_t dh = trace.channels / trace.heads;
    MacReport rep;
    // replay the schedule per parity: a layer's scores run over the most
    // recent same-parity support, its aggregation over the focused one
    std::int64_t prev_nnz[2] = {-1, -1};
    for (const auto& lt : trace.layers) {
        const std::int64_t n = lt.tokens;
        const std::uint64_t rows_heads = u(lt.num_windows) * u(trace.heads) * u(n);
        std::int64_t score_nnz = n;
        std::int64_t agg_nnz = n;
        switch (trace.variant) {
            case Variant::Vanilla:
                break;
            case Variant::TopK:
                agg_nnz = std::min(lt.k_l, n);
                break;
            case Variant::Progressive:
                // dense recomputation; support stays at the inherited (full) set
                break;
            case Variant::Pfa: {
                std::int64_t& prev = prev_nnz[lt.parity];
                if (prev < 0) prev = n;  // all-ones initialization
                score_nnz = prev;
                agg_nnz = std::min(lt.k_l, prev);
                prev = agg_nnz;
                break;
            }
        }
        LayerMacs lm;
        lm.layer = lt.layer;
        lm.analytic_score_macs = rows_heads * u(score_nnz) * u(dh);
        lm.analytic_aggregate_macs = rows_heads * u(agg_nnz) * u(dh);
        lm.measured_projection_macs = lt.projection_macs;
        for (const auto& cell : lt.cells) {
            lm.measured_score_macs += cell.score_macs;
            lm.measured_aggregate_macs += cell.aggregate_macs;
        }
        rep.total_analytic_score += lm.analytic_score_macs;
        rep.total_measured_score += lm.measured_score_macs;
        rep.total_analytic_aggregate += lm.analytic_aggregate_macs;
        rep.total_measured_aggregate += lm.measured_aggregate_macs;
        rep.sa_baseline_attention_macs += 2 * rows_heads * u(n) * u(dh);
        rep.layers.push_back(lm);
    }
    rep.reduction_ratio =
        static_cast<double>(rep.total_measured_score + rep.total_measured_aggregate) /
        static_cast<double>(rep.sa_baseline_attention_macs);
    return rep;
}

std::vector<LayerStats> attention_stats(const CascadeTrace& trace) {
    std::vector<LayerStats> out;
    out.reserve(trace.layers.size());
    for (const auto& lt : trace.layers) {
        LayerStats s;
        s.layer = lt.layer;
        s.parity = lt.parity;
        s.k_l = lt.k_l;
        s.rowsum_min = std::numeric_limits<double>::infinity();
        s.rowsum_max = -std::numeric_limits<double>::infinity();
        std::uint64_t rows = 0, support = 0;
        double entropy = 0.0, overlap = 0.0;
        for (const auto& c : lt.cells) {
            rows += u(c.rows);
            support += c.support_total;
            entropy += c.entropy_sum;
            overlap += c.overlap_fraction;
            s.max_support = std::max(s.max_support, c.support_max);
            s.rowsum_min = std::min(s.rowsum_min, c.rowsum_min);
            s.rowsum_max = std::max(s.rowsum_max, c.rowsum_max);
            s.score_macs += c.score_macs;
            s.aggregate_macs += c.aggregate_macs;
        }
        s.mean_support = static_cast<double>(support) / static_cast<double>(rows);
        s.mean_entropy = entropy / static_cast<double>(rows);
        s.mean_overlap = overlap / static_cast<double>(lt.cells.size());
        out.push_back(s);
    }
    return out;
}

Fraction schedule_reduction_ratio(const ModelPreset& preset) {
    validate_preset(preset);
    const std::int64_t n = preset.window_size * preset.window_size;
    std::int64_t prev_nnz[2] = {-1, -1};
    std::uint64_t work = 0, baseline = 0;
    std::int64_t layer = 0;
    for (const auto& b : preset.blocks) {
        for (std::int64_t i = 0; i < b.layers; ++i) {
            ++layer;
            const std::int64_t k = std::min(k_for_layer(preset, layer), n);
            std::int64_t& prev = prev_nnz[layer % 2];
            if (prev < 0) prev = n;
            const std::int64_t agg = std::min(k, prev);
            work += u(prev) + u(agg);
            prev = agg;
            baseline += 2 * u(n);
        }
    }
    const std::uint64_t g = std::gcd(work, baseline);
    return {work / g, baseline / g};
}

}  // namespace pfa
