#include "pfa/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "pfa/attention.hpp"
#include "pfa/cascade.hpp"
#include "pfa/io.hpp"
#include "pfa/metrics.hpp"

namespace pfa {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Dense replay of one focused step, coded against Eigen arrays only.
struct ReplayState {
    Matrix a;     // dense attention, zeros off support
    Matrix mask;  // 0/1
};

ReplayState replay_step(const Matrix& q, const Matrix& k, const Matrix& v, const ReplayState& prev,
                        std::int64_t k_l, bool renorm, Matrix* out) {
    const std::int64_t n = q.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    const Matrix scores = scale * (q * k.transpose());
    ReplayState next;
    next.a = Matrix::Zero(n, n);
    next.mask = Matrix::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < n; ++j)
            if (prev.mask(i, j) != 0.0) mx = std::max(mx, scores(i, j));
        double sum = 0.0;
        Eigen::VectorXd sm = Eigen::VectorXd::Zero(n);
        for (std::int64_t j = 0; j < n; ++j) {
            if (prev.mask(i, j) != 0.0) {
                sm(j) = std::exp(scores(i, j) - mx);
                sum += sm(j);
            }
        }
        sm /= sum;
        // inherit and renormalize over the support
        Eigen::VectorXd prod = Eigen::VectorXd::Zero(n);
        double psum = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
            if (prev.mask(i, j) != 0.0) {
                prod(j) = sm(j) * prev.a(i, j);
                psum += prod(j);
            }
        }
        prod /= psum;
        // top-k, ties to the lower column
        std::vector<std::int64_t> idx;
        for (std::int64_t j = 0; j < n; ++j)
            if (prev.mask(i, j) != 0.0) idx.push_back(j);
        std::sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
            if (prod(a) != prod(b)) return prod(a) > prod(b);
            return a < b;
        });
        if (static_cast<std::int64_t>(idx.size()) > k_l) idx.resize(static_cast<std::size_t>(k_l));
        double ksum = 0.0;
        for (std::int64_t j : idx) ksum += prod(j);
        for (std::int64_t j : idx) {
            next.a(i, j) = renorm ? prod(j) / ksum : prod(j);
            next.mask(i, j) = 1.0;
        }
    }
    if (out) *out = next.a * v;
    return next;
}

struct Env {
    std::vector<CheckResult> results;
    const VerifyOptions& opt;
    explicit Env(const VerifyOptions& o) : opt(o) {}
    void check(const std::string& name, bool pass, const std::string& detail) {
        results.push_back({name, pass, detail});
    }
};

void check_dense_matmul(Env& env) {
    std::mt19937_64 rng(env.opt.seed);
    double worst = 0.0;
    for (int it = 0; it < 50; ++it) {
        const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 12);
        const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 12);
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 12);
        const Matrix a = seeded_fill(m, k, rng(), FillDistribution::Uniform);
        const Matrix b = seeded_fill(k, n, rng(), FillDistribution::Uniform);
        const Matrix got = dense_matmul(a, b);
        Matrix ref = Matrix::Zero(m, n);
        for (std::int64_t p = 0; p < k; ++p)
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t j = 0; j < n; ++j) ref(i, j) += a(i, p) * b(p, j);
        worst = std::max(worst, max_abs_diff(got, ref));
    }
    env.check("dense_matmul_vs_triple_loop", worst <= 1e-12, "max diff " + fmt(worst));
}

void check_softmax(Env& env) {
    std::mt19937_64 rng(env.opt.seed + 1);
    double worst_shift = 0.0, worst_sum = 0.0;
    for (int it = 0; it < 50; ++it) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 14);
        const Matrix s = seeded_fill(n, n, rng(), FillDistribution::Gaussian, 3.0);
        const IndexMask full = IndexMask::full(n, n);
        const RowSparseMatrix a = masked_softmax_rows(s, full, 1.0);
        const RowSparseMatrix b = masked_softmax_rows(
            (s.array() + 123.5).matrix(), full, 1.0);
        for (std::int64_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
                const auto& ea = a.row_entries[static_cast<std::size_t>(i)][j];
                const auto& eb = b.row_entries[static_cast<std::size_t>(i)][j];
                worst_shift = std::max(worst_shift, std::abs(ea.weight - eb.weight));
                sum += ea.weight;
            }
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        }
    }
    env.check("softmax_shift_invariance", worst_shift <= 1e-12, "max diff " + fmt(worst_shift));
    env.check("softmax_row_sums", worst_sum <= 1e-9, "max |sum-1| " + fmt(worst_sum));
}

void check_smm(Env& env) {
    std::mt19937_64 rng(env.opt.seed + 2);
    double worst = 0.0;
    bool macs_ok = true;
    for (int it = 0; it < 30; ++it) {
        const std::int64_t n = 8 + static_cast<std::int64_t>(rng() % 25);
        const std::int64_t d = 2 + static_cast<std::int64_t>(rng() % 15);
        const Matrix q = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
        const Matrix k = seeded_fill(n, d, rng(), FillDistribution::Gaussian);
        IndexMask mask(n, n);
        for (std::int64_t i = 0; i < n; ++i) {
            auto& row = mask.row_cols[static_cast<std::size_t>(i)];
            for (std::int64_t j = 0; j < n; ++j)
                if (rng() % 4 == 0 || j == i) row.push_back(j);
        }
        const SmmScoresResult res = smm_scores(q, k, mask);
        macs_ok = macs_ok && res.macs == mask.nnz() * static_cast<std::uint64_t>(d);
        const Matrix dense = dense_matmul(q, k.transpose());
        for (std::int64_t i = 0; i < n; ++i) {
            for (const auto& e : res.scores.row_entries[static_cast<std::size_t>(i)]) {
                worst = std::max(worst, std::abs(e.weight - dense(i, e.col)));
            }
        }
    }
    env.check("smm_scores_vs_dense_then_mask", worst <= 1e-12, "max diff " + fmt(worst));
    env.check("smm_scores_mac_counter", macs_ok, "nnz(mask) * d exact");
}

void check_pfa_chain(Env& env) {
    std::mt19937_64 rng(env.opt.seed + 3);
    double worst = 0.0;
    std::string fault_detail;
    bool fault_seen = false;
    for (int rep = 0; rep < 20; ++rep) {
        const std::int64_t n = 16;
        const std::int64_t d = 4;
        ReplayState replay{densify(uniform_full(n)), Matrix::Ones(n, n)};
        RowSparseMatrix prev = uniform_full(n);
        IndexMask prev_mask = IndexMask::full(n, n);
        const std::vector<std::int64_t> ks = {16, 8, 4};
        for (std::size_t l = 0; l < ks.size(); ++l) {
            AttentionInputs in{seeded_fill(n, d, rng(), FillDistribution::Gaussian),
                               seeded_fill(n, d, rng(), FillDistribution::Gaussian),
                               seeded_fill(n, d, rng(), FillDistribution::Gaussian)};
            PfaStepResult got =
                pfa_step(in, prev, prev_mask, ks[l], env.opt.renormalize_after_topk);
            if (env.opt.inject_fault && rep == 0 && l == 1) {
                auto& e = got.attention.row_entries[3][0];
                e.weight += 1e-6;
                fault_detail = "perturbed layer 2 row 3 col " + std::to_string(e.col);
            }
            Matrix replay_out;
            replay = replay_step(in.q, in.k, in.v, replay, ks[l],
                                 env.opt.renormalize_after_topk, &replay_out);
            worst = std::max(worst, max_abs_diff(densify(got.attention), replay.a));
            worst = std::max(worst, max_abs_diff(got.output, replay_out));
            if (worst > 1e-10 && env.opt.inject_fault) fault_seen = true;
            prev = std::move(got.attention);
            prev_mask = std::move(got.mask);
        }
    }
    if (env.opt.inject_fault) {
        env.check("fault_injection_detected", fault_seen,
                  fault_seen ? fault_detail + "; max diff " + fmt(worst)
                             : "fault went undetected");
        // the perturbed comparison must fail overall
        env.check("pfa_chain_vs_dense_replay", worst <= 1e-10, "max diff " + fmt(worst) +
                  (fault_detail.empty() ? "" : " (" + fault_detail + ")"));
    } else {
        env.check("pfa_chain_vs_dense_replay", worst <= 1e-10, "max diff " + fmt(worst));
    }
}

ModelPreset desk_preset(std::int64_t window, std::int64_t channels, std::int64_t heads,
                        std::vector<BlockSpec> blocks) {
    ModelPreset p;
    p.name = "desk";
    p.window_size = window;
    p.channels = channels;
    p.heads = heads;
    p.blocks = std::move(blocks);
    return p;
}

void check_degenerate(Env& env) {
    // every parity chain at depth 1 and K = N: the sparse path must equal
    // the dense one on the whole cascade output
    const std::int64_t w = 8;
    auto [preset, weights] =
        build_custom_preset(desk_preset(w, 16, 2, {{1, w * w}, {1, w * w}}), env.opt.seed + 4);
    FeatureMap f(2 * w, 2 * w, 16);
    f.values = seeded_fill(f.h * f.w, f.c, env.opt.seed + 5, FillDistribution::Uniform);
    const CascadeResult dense = run_cascade(preset, weights, f, Variant::Vanilla);
    const CascadeResult sparse = run_cascade(preset, weights, f, Variant::Pfa);
    const double diff = max_abs_diff(dense.output.values, sparse.output.values);
    env.check("pfa_equiv_vanilla_k_eq_n", diff <= 1e-10, "pfa == vanilla, max diff " + fmt(diff));

    // deeper cascade: with K = N nothing is skipped, so the sparse path
    // must match the dense progressive recomputation at every depth
    auto [p2, w2] = build_custom_preset(desk_preset(w, 16, 2, {{6, w * w}}), env.opt.seed + 6);
    const CascadeResult prog = run_cascade(p2, w2, f, Variant::Progressive);
    const CascadeResult pfa6 = run_cascade(p2, w2, f, Variant::Pfa);
    const double diff6 = max_abs_diff(prog.output.values, pfa6.output.values);
    env.check("pfa_equiv_progressive_k_eq_n_depth6", diff6 <= 1e-10, "max diff " + fmt(diff6));
}

void check_cascade_invariants(Env& env) {
    auto [preset, weights] = build_custom_preset(
        desk_preset(8, 16, 2, {{2, 64}, {2, 16}, {2, 8}}), env.opt.seed + 7);
    FeatureMap f(16, 16, 16);
    f.values = seeded_fill(f.h * f.w, f.c, env.opt.seed + 8, FillDistribution::Uniform);
    const CascadeResult run =
        run_cascade(preset, weights, f, Variant::Pfa, env.opt.renormalize_after_topk);
    const auto stats = attention_stats(run.trace);
    bool shrink = true, overlap = true;
    double prev_support[2] = {1e18, 1e18};
    for (const auto& s : stats) {
        if (s.mean_support > prev_support[s.parity] + 1e-12) shrink = false;
        prev_support[s.parity] = s.mean_support;
        if (std::abs(s.mean_overlap - 1.0) > 1e-12) overlap = false;
    }
    env.check("support_nonincreasing_per_parity", shrink, "trace mean_support per parity");
    env.check("support_subset_of_parent", overlap, "overlap fraction == 1");

    CostModelInput in;
    in.h = f.h;
    in.w = f.w;
    in.channels = preset.channels;
    in.window_size = preset.window_size;
    in.layers = preset.total_layers();
    in.mode = CostMode::PfaSchedule;
    for (std::int64_t l = 1; l <= in.layers; ++l) in.k_schedule.push_back(k_for_layer(preset, l));
    const MacReport rep = reconcile(run.trace, in);
    bool macs = true;
    for (const auto& lm : rep.layers) {
        macs = macs && lm.measured_score_macs == lm.analytic_score_macs &&
               lm.measured_aggregate_macs == lm.analytic_aggregate_macs;
    }
    env.check("mac_counters_match_schedule", macs, "exact integer equality per layer");
}

void check_thread_determinism(Env& env) {
    auto [preset, weights] =
        build_custom_preset(desk_preset(8, 16, 2, {{2, 64}, {2, 16}}), env.opt.seed + 9);
    FeatureMap f(16, 16, 16);
    f.values = seeded_fill(f.h * f.w, f.c, env.opt.seed + 10, FillDistribution::Uniform);
    const CascadeResult a = run_cascade(preset, weights, f, Variant::Pfa, false, 1);
    const CascadeResult b = run_cascade(preset, weights, f, Variant::Pfa, false,
                                        std::max(2, env.opt.threads));
    const bool same_vals = (a.output.values.array() == b.output.values.array()).all();
    const bool same_csv = render_run_stats_csv(a.trace) == render_run_stats_csv(b.trace);
    env.check("thread_count_determinism", same_vals && same_csv,
              same_vals ? "bit-identical outputs and stats" : "outputs differ");
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opt) {
    Env env(opt);
    check_dense_matmul(env);
    check_softmax(env);
    check_smm(env);
    check_pfa_chain(env);
    check_degenerate(env);
    check_cascade_invariants(env);
    check_thread_determinism(env);
    return env.results;
}

std::string render_verify_csv(const std::vector<CheckResult>& results) {
    std::ostringstream os;
    os << "check,status,detail\n";
    for (const auto& r : results) {
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        os << r.name << "," << (r.pass ? "pass" : "fail") << "," << detail << "\n";
    }
    return os.str();
}

}  // namespace pfa
