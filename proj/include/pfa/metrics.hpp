#ifndef PFA_METRICS_HPP
#define PFA_METRICS_HPP

#include <cstdint>
#include <vector>

#include "pfa/cascade.hpp"

namespace pfa {

enum class CostMode { Sa, PfaGeometric, PfaSchedule };

struct CostModelInput {
    std::int64_t h = 0, w = 0;
    std::int64_t channels = 0;
    std::int64_t window_size = 0;
    std::int64_t layers = 0;
    double alpha = 0.5;
    CostMode mode = CostMode::Sa;
    std::vector<std::int64_t> k_schedule;  // one K per layer, schedule mode
};

/// 4hwLC^2 + 2W^2hwLC, evaluated exactly in integers.
std::uint64_t omega_sa(const CostModelInput& in);

/// Sum over layers of 4hwC^2 + 2 K^l hw C, with K^l from the geometric
/// rounding rule or the explicit schedule.
std::uint64_t omega_pfa(const CostModelInput& in);

struct LayerMacs {
    std::int64_t layer = 0;
    std::uint64_t analytic_score_macs = 0;
    std::uint64_t measured_score_macs = 0;
    std::uint64_t analytic_aggregate_macs = 0;
    std::uint64_t measured_aggregate_macs = 0;
    std::uint64_t measured_projection_macs = 0;
};

struct MacReport {
    std::vector<LayerMacs> layers;
    std::uint64_t total_analytic_score = 0, total_measured_score = 0;
    std::uint64_t total_analytic_aggregate = 0, total_measured_aggregate = 0;
    std::uint64_t sa_baseline_attention_macs = 0;  // score + aggregate at full support
    double reduction_ratio = 1.0;                  // measured attention MACs / SA baseline
};

/// Per-layer exact reconciliation of the measured counters against the
/// schedule-derived analytic values (integer equality expected).
MacReport reconcile(const CascadeTrace& trace, const CostModelInput& in);

struct LayerStats {
    std::int64_t layer = 0;
    int parity = 1;
    std::int64_t k_l = 0;
    double mean_support = 0.0;
    std::int64_t max_support = 0;
    double mean_entropy = 0.0;
    double mean_overlap = 1.0;
    double rowsum_min = 0.0, rowsum_max = 0.0;
    std::uint64_t score_macs = 0, aggregate_macs = 0;
};

std::vector<LayerStats> attention_stats(const CascadeTrace& trace);

/// Attention-work reduction of a preset's K schedule against full SA,
/// as an exact fraction of per-token MAC counts (score at the inherited
/// support, aggregation at the post-focus support).
struct Fraction {
    std::uint64_t num = 0, den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Fraction schedule_reduction_ratio(const ModelPreset& preset);

}  // namespace pfa

#endif
