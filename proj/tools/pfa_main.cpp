#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pfa/io.hpp"
#include "pfa/metrics.hpp"
#include "pfa/verify.hpp"

namespace {

using namespace pfa;

struct RunConfig {
    std::string preset;  // pft | pft_light | empty = custom desk config
    std::string variant = "pfa";
    std::int64_t window = 16;
    std::int64_t heads = 4;
    std::int64_t channels = 52;
    std::vector<std::int64_t> k_list = {256, 64, 32, 16, 8};
    std::vector<std::int64_t> layers_list = {2, 4, 6, 6, 6};
    double alpha = 0.0;  // > 0 selects geometric focus mode
    std::int64_t h = 64, w = 64;
    std::string input;  // raw tensor path; empty = seeded synthetic
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out = "out";
    bool renorm_topk = false;
    std::int64_t probe_window = -1;
    std::int64_t probe_head = 0;
    std::int64_t probe_row = 0;
    bool inject_fault = false;
};

std::vector<std::int64_t> parse_int_list(const std::string& s) {
    std::vector<std::int64_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoll(item));
    }
    return out;
}

void apply_config_file(RunConfig& c, const std::string& path) {
    for (const auto& [key, value] : parse_config_file(path)) {
        if (key == "preset") c.preset = value;
        else if (key == "variant") c.variant = value;
        else if (key == "window") c.window = std::stoll(value);
        else if (key == "heads") c.heads = std::stoll(value);
        else if (key == "channels") c.channels = std::stoll(value);
        else if (key == "k_list") c.k_list = parse_int_list(value);
        else if (key == "layers_list") c.layers_list = parse_int_list(value);
        else if (key == "alpha") c.alpha = std::stod(value);
        else if (key == "h") c.h = std::stoll(value);
        else if (key == "w") c.w = std::stoll(value);
        else if (key == "input") c.input = value;
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "threads") c.threads = std::stoi(value);
        else if (key == "out") c.out = value;
        else if (key == "renorm_topk") c.renorm_topk = value == "1" || value == "true";
        else if (key == "probe_window") c.probe_window = std::stoll(value);
        else if (key == "probe_head") c.probe_head = std::stoll(value);
        else if (key == "probe_row") c.probe_row = std::stoll(value);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

std::pair<ModelPreset, LayerWeights> make_model(const RunConfig& c) {
    if (!c.preset.empty()) return build_preset(c.preset, c.seed);
    ModelPreset p;
    p.name = "custom";
    p.window_size = c.window;
    p.heads = c.heads;
    p.channels = c.channels;
    if (c.alpha > 0.0) {
        p.focus_mode = FocusMode::Geometric;
        p.alpha = c.alpha;
        for (std::int64_t l : c.layers_list) p.blocks.push_back({l, 0});
    } else {
        if (c.k_list.size() != c.layers_list.size()) {
            throw std::invalid_argument("k_list and layers_list must have equal length");
        }
        for (std::size_t i = 0; i < c.k_list.size(); ++i) {
            p.blocks.push_back({c.layers_list[i], c.k_list[i]});
        }
    }
    return build_custom_preset(std::move(p), c.seed);
}

FeatureMap make_input(const RunConfig& c, const ModelPreset& preset) {
    if (!c.input.empty()) {
        FeatureMap f = read_tensor(c.input);
        if (f.c != preset.channels) {
            throw std::invalid_argument("input tensor channels do not match the model");
        }
        return f;
    }
    FeatureMap f(c.h, c.w, preset.channels);
    f.values = seeded_fill(f.h * f.w, f.c, c.seed ^ 0x5eedf00dULL, FillDistribution::Uniform);
    return f;
}

CostModelInput cost_input(const RunConfig& c, const ModelPreset& preset) {
    CostModelInput in;
    in.h = c.h;
    in.w = c.w;
    in.channels = preset.channels;
    in.window_size = preset.window_size;
    in.layers = preset.total_layers();
    if (preset.focus_mode == FocusMode::Geometric) {
        in.mode = CostMode::PfaGeometric;
        in.alpha = preset.alpha;
    } else {
        in.mode = CostMode::PfaSchedule;
        for (std::int64_t l = 1; l <= in.layers; ++l) {
            in.k_schedule.push_back(k_for_layer(preset, l));
        }
    }
    return in;
}

int cmd_verify(const RunConfig& c) {
    VerifyOptions opt;
    opt.seed = c.seed;
    opt.threads = c.threads;
    opt.renormalize_after_topk = c.renorm_topk;
    opt.inject_fault = c.inject_fault;
    const auto results = run_verification(opt);
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
        all_pass = all_pass && r.pass;
    }
    std::filesystem::create_directories(c.out);
    std::ofstream(c.out + "/verify.csv") << render_verify_csv(results);
    std::cout << (all_pass ? "verification passed" : "verification FAILED") << "\n";
    return all_pass ? 0 : 1;
}

int cmd_run(const RunConfig& c) {
    auto [preset, weights] = make_model(c);
    const FeatureMap f = make_input(c, preset);
    RowProbe probe{c.probe_window, c.probe_head, c.probe_row};
    const CascadeResult res =
        run_cascade(preset, weights, f, variant_from_string(c.variant), c.renorm_topk,
                    c.threads, probe);
    std::filesystem::create_directories(c.out);
    std::ofstream(c.out + "/run_stats.csv") << render_run_stats_csv(res.trace);
    write_tensor(c.out + "/output.pft", res.output);
    if (c.probe_window >= 0) {
        for (const auto& lt : res.trace.layers) {
            std::ostringstream name;
            name << c.out << "/attn_layer_" << (lt.layer < 10 ? "0" : "") << lt.layer << ".pgm";
            write_attention_pgm(name.str(), lt.probed_row, preset.window_size);
        }
    }
    const auto stats = attention_stats(res.trace);
    std::cout << "layer parity k    mean_support mean_entropy score_macs aggregate_macs\n";
    for (const auto& s : stats) {
        std::cout << s.layer << "     " << s.parity << "      " << s.k_l << "    "
                  << s.mean_support << "  " << s.mean_entropy << "  " << s.score_macs << "  "
                  << s.aggregate_macs << "\n";
    }
    std::cout << "wrote " << c.out << "/run_stats.csv and output.pft\n";
    return 0;
}

int cmd_flops(const RunConfig& c) {
    auto [preset, weights] = make_model(c);
    (void)weights;
    CostModelInput in = cost_input(c, preset);
    CostModelInput sa = in;
    sa.mode = CostMode::Sa;
    const std::uint64_t sa_flops = omega_sa(sa);
    const std::uint64_t pfa_flops = omega_pfa(in);
    const std::uint64_t hw = static_cast<std::uint64_t>(in.h * in.w);
    const std::uint64_t cch = static_cast<std::uint64_t>(in.channels);

    std::cout << "geometry: " << in.h << "x" << in.w << "x" << in.channels << ", window "
              << in.window_size << ", layers " << in.layers << "\n";
    std::cout << "per-block K:";
    for (const auto& b : preset.blocks) {
        std::cout << " " << (preset.focus_mode == FocusMode::Geometric ? -1 : b.k_retained);
    }
    if (preset.focus_mode == FocusMode::Geometric) {
        std::cout << " (geometric, alpha " << preset.alpha << ")";
    }
    std::cout << "\n\nlayer  K      attn_term_flops  attn_term_macs  proj_term_flops\n";
    const std::uint64_t proj_flops = 4 * hw * cch * cch;
    std::uint64_t first_attn = 0;
    for (std::int64_t l = 1; l <= in.layers; ++l) {
        const std::int64_t k = in.mode == CostMode::PfaGeometric
                                   ? std::min<std::int64_t>(k_for_layer(preset, l),
                                                            in.window_size * in.window_size)
                                   : in.k_schedule[static_cast<std::size_t>(l - 1)];
        const std::uint64_t attn = 2 * static_cast<std::uint64_t>(k) * hw * cch;
        if (l == 1) first_attn = attn;
        std::cout << l << "      " << k << "      " << attn << "  " << attn / 2 << "  "
                  << proj_flops << "\n";
        if (l == in.layers && first_attn > 0) {
            std::cout << "layer-" << l << " attention term / layer-1: "
                      << 100.0 * static_cast<double>(attn) / static_cast<double>(first_attn)
                      << "%\n";
        }
    }
    std::cout << "\nomega_sa  = " << sa_flops << " flops (" << sa_flops / 2 << " macs)\n";
    std::cout << "omega_pfa = " << pfa_flops << " flops (" << pfa_flops / 2 << " macs)\n";
    std::cout << "total reduction omega_pfa/omega_sa = "
              << static_cast<double>(pfa_flops) / static_cast<double>(sa_flops) << "\n";
    const Fraction r = schedule_reduction_ratio(preset);
    std::cout << "attention-term reduction (schedule vs full SA): " << r.num << "/" << r.den
              << " = " << r.value() << "\n";
    return 0;
}

int cmd_bench(const RunConfig& c) {
    using clock = std::chrono::steady_clock;
    std::ostringstream csv;
    csv << "variant,N,d,density,median_ns,macs,ns_per_mac\n";
    auto time_median = [](int warmup, int iters, const auto& fn) {
        for (int i = 0; i < warmup; ++i) fn();
        std::vector<double> ns;
        ns.reserve(static_cast<std::size_t>(iters));
        for (int i = 0; i < iters; ++i) {
            const auto t0 = clock::now();
            fn();
            const auto t1 = clock::now();
            ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
        }
        std::sort(ns.begin(), ns.end());
        return ns[ns.size() / 2];
    };
    std::uint64_t sink = 0;
    for (std::int64_t n : {std::int64_t(256), std::int64_t(1024)}) {
        for (std::int64_t d : {std::int64_t(32), std::int64_t(64)}) {
            const Matrix q = seeded_fill(n, d, c.seed, FillDistribution::Gaussian);
            const Matrix k = seeded_fill(n, d, c.seed + 1, FillDistribution::Gaussian);
            const Matrix v = seeded_fill(n, d, c.seed + 2, FillDistribution::Gaussian);
            const Matrix kt = k.transpose();
            const double dense_score_ns =
                time_median(5, 20, [&] { sink += static_cast<std::uint64_t>(dense_matmul(q, kt)(0, 0)); });
            const std::uint64_t dense_macs =
                static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) *
                static_cast<std::uint64_t>(d);
            csv << "dense_scores," << n << "," << d << ",1," << dense_score_ns << ","
                << dense_macs << "," << dense_score_ns / static_cast<double>(dense_macs) << "\n";
            for (int denom : {1, 4, 16, 64}) {
                // deterministic mask with exactly n/denom entries per row
                IndexMask mask(n, n);
                std::mt19937_64 rng(c.seed + static_cast<std::uint64_t>(denom));
                const std::int64_t per_row = n / denom;
                std::vector<std::int64_t> cols(static_cast<std::size_t>(n));
                std::iota(cols.begin(), cols.end(), 0);
                for (std::int64_t i = 0; i < n; ++i) {
                    std::shuffle(cols.begin(), cols.end(), rng);
                    auto& row = mask.row_cols[static_cast<std::size_t>(i)];
                    row.assign(cols.begin(), cols.begin() + per_row);
                    std::sort(row.begin(), row.end());
                }
                std::uint64_t macs = 0;
                const double ns = time_median(5, 20, [&] {
                    const SmmScoresResult r = smm_scores(q, k, mask);
                    macs = r.macs;
                    sink += static_cast<std::uint64_t>(r.scores.row_entries[0][0].weight);
                });
                csv << "smm_scores," << n << "," << d << "," << 1.0 / denom << "," << ns << ","
                    << macs << "," << ns / static_cast<double>(macs) << "\n";
                RowSparseMatrix a(n, n);
                const double w = 1.0 / static_cast<double>(per_row);
                for (std::int64_t i = 0; i < n; ++i) {
                    for (std::int64_t col : mask.row_cols[static_cast<std::size_t>(i)]) {
                        a.row_entries[static_cast<std::size_t>(i)].push_back({col, w});
                    }
                }
                std::uint64_t agg_macs = 0;
                const double agg_ns = time_median(5, 20, [&] {
                    const SmmAggregateResult r = smm_aggregate(a, v, mask);
                    agg_macs = r.macs;
                    sink += static_cast<std::uint64_t>(r.output(0, 0));
                });
                csv << "smm_aggregate," << n << "," << d << "," << 1.0 / denom << "," << agg_ns
                    << "," << agg_macs << "," << agg_ns / static_cast<double>(agg_macs) << "\n";
            }
        }
    }
    std::filesystem::create_directories(c.out);
    std::ofstream(c.out + "/bench.csv") << csv.str();
    std::cout << csv.str();
    if (sink == 0xdeadbeef) std::cout << "";  // keep the kernels from being optimized out
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive focused attention toolkit"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    RunConfig cfg;
    if (const char* env = std::getenv("PFA_THREADS")) cfg.threads = std::atoi(env);

    std::string config_path, k_list_arg, layers_list_arg;
    auto add_common = [&](CLI::App* sub) {
        // --h (image height) needs the single-letter name, so help keeps
        // only its long form
        sub->set_help_flag("--help", "print help");
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--preset", cfg.preset, "pft or pft_light");
        sub->add_option("--variant", cfg.variant, "vanilla|topk|progressive|pfa");
        sub->add_option("--window", cfg.window, "window size in pixels");
        sub->add_option("--heads", cfg.heads);
        sub->add_option("--channels", cfg.channels);
        sub->add_option("--alpha", cfg.alpha, "geometric focus ratio");
        sub->add_option("--k-list", k_list_arg, "per-block retained K, comma separated");
        sub->add_option("--layers-list", layers_list_arg, "per-block layer counts");
        sub->add_option("--h", cfg.h);
        sub->add_option("--w", cfg.w);
        sub->add_option("--input", cfg.input, "raw PFT1 tensor path");
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--threads", cfg.threads);
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_flag("--renorm-topk", cfg.renorm_topk, "renormalize rows after top-k");
    };

    auto* verify = app.add_subcommand("verify", "oracle-equivalence and invariant suites");
    add_common(verify);
    verify->add_flag("--inject-fault", cfg.inject_fault, "harness self-test");

    auto* bench = app.add_subcommand("bench", "sparse vs dense kernel micro-benchmarks");
    add_common(bench);

    auto* run = app.add_subcommand("run", "cascade run with statistics export");
    add_common(run);
    run->add_option("--probe-window", cfg.probe_window, "window for heatmap export");
    run->add_option("--probe-head", cfg.probe_head);
    run->add_option("--probe-row", cfg.probe_row, "query row for heatmap export");

    auto* flops = app.add_subcommand("flops", "analytic cost model table");
    add_common(flops);

    // config file first (pre-scanned), so explicit flags override its keys
    try {
        for (int i = 1; i < argc - 1; ++i) {
            if (std::string(argv[i]) == "--config") {
                apply_config_file(cfg, argv[i + 1]);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!k_list_arg.empty()) cfg.k_list = parse_int_list(k_list_arg);
        if (!layers_list_arg.empty()) cfg.layers_list = parse_int_list(layers_list_arg);

        if (verify->parsed()) return cmd_verify(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        if (run->parsed()) return cmd_run(cfg);
        if (flops->parsed()) return cmd_flops(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
