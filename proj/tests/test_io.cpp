#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pfa/cascade.hpp"
#include "pfa/io.hpp"

using namespace pfa;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct TempDir {
    std::filesystem::path dir;
    TempDir() : dir(std::filesystem::temp_directory_path() / "pfa_io_test") {
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("tensor file round-trips bit-exactly") {
    TempDir tmp;
    FeatureMap f(5, 7, 3);
    f.values = seeded_fill(35, 3, 42, FillDistribution::Gaussian);
    const std::string path = tmp / "t.pft";
    write_tensor(path, f);
    const FeatureMap g = read_tensor(path);
    CHECK(g.h == 5);
    CHECK(g.w == 7);
    CHECK(g.c == 3);
    CHECK((f.values.array() == g.values.array()).all());

    const std::string raw = slurp(path);
    CHECK(raw.size() == 4 + 12 + 35 * 3 * 8);
    CHECK(raw.substr(0, 4) == "PFT1");
}

TEST_CASE("read_tensor rejects a bad magic") {
    TempDir tmp;
    const std::string path = tmp / "bad.pft";
    std::ofstream(path, std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(read_tensor(path), std::runtime_error);
}

TEST_CASE("attention PGM export") {
    TempDir tmp;
    SUBCASE("single-entry row lights exactly one pixel") {
        const std::string path = tmp / "one.pgm";
        write_attention_pgm(path, {{5, 1.0}}, 4);
        const std::string raw = slurp(path);
        CHECK(raw.substr(0, 3) == "P5\n");
        const std::size_t header = raw.find("65535\n") + 6;
        REQUIRE(raw.size() - header == 16 * 2);
        int nonzero = 0;
        for (std::size_t i = header; i < raw.size(); i += 2) {
            if (raw[i] != 0 || raw[i + 1] != 0) ++nonzero;
        }
        CHECK(nonzero == 1);
    }
    SUBCASE("export is byte-stable") {
        const std::vector<SparseEntry> row = {{0, 0.25}, {3, 0.5}, {9, 0.25}};
        write_attention_pgm(tmp / "a.pgm", row, 4);
        write_attention_pgm(tmp / "b.pgm", row, 4);
        CHECK(slurp(tmp / "a.pgm") == slurp(tmp / "b.pgm"));
    }
}

TEST_CASE("config parser handles comments, blanks, and overrides") {
    TempDir tmp;
    const std::string path = tmp / "cfg";
    std::ofstream(path) << "# a comment\n"
                        << "window = 16\n"
                        << "\n"
                        << "variant=pfa   # trailing comment\n"
                        << "window=32\n";
    const auto kv = parse_config_file(path);
    CHECK(kv.at("window") == "32");
    CHECK(kv.at("variant") == "pfa");
    CHECK(kv.size() == 2);

    std::ofstream(tmp / "bad") << "no equals sign here\n";
    CHECK_THROWS_AS(parse_config_file(tmp / "bad"), std::runtime_error);
}

TEST_CASE("run stats CSV is byte-stable across thread counts") {
    ModelPreset p;
    p.name = "desk";
    p.window_size = 8;
    p.channels = 16;
    p.heads = 2;
    p.blocks = {{2, 64}, {2, 16}};
    auto [preset, weights] = build_custom_preset(std::move(p), 21);
    FeatureMap f(16, 16, 16);
    f.values = seeded_fill(256, 16, 22, FillDistribution::Uniform);
    const CascadeResult a = run_cascade(preset, weights, f, Variant::Pfa, false, 1);
    const CascadeResult b = run_cascade(preset, weights, f, Variant::Pfa, false, 6);
    const std::string csv = render_run_stats_csv(a.trace);
    CHECK(csv == render_run_stats_csv(b.trace));
    CHECK(csv.substr(0, csv.find('\n')) ==
          "layer,parity,head,mean_support,max_support,mean_entropy,score_macs,aggregate_macs");
}
