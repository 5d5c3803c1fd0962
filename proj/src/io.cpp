#include "pfa/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pfa {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(const std::string& path, const FeatureMap& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_tensor: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(f.h));
    put_u32(os, static_cast<std::uint32_t>(f.w));
    put_u32(os, static_cast<std::uint32_t>(f.c));
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(f.h * f.w * f.c)));
    if (!os) throw std::runtime_error("write_tensor: write failed for " + path);
}

FeatureMap read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tensor: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("read_tensor: bad magic in " + path);
    }
    const std::int64_t h = get_u32(is);
    const std::int64_t w = get_u32(is);
    const std::int64_t c = get_u32(is);
    if (h < 1 || w < 1 || c < 1) throw std::runtime_error("read_tensor: bad header in " + path);
    FeatureMap f(h, w, c);
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(h * w * c)));
    if (!is) throw std::runtime_error("read_tensor: truncated file " + path);
    return f;
}

void write_attention_pgm(const std::string& path, const std::vector<SparseEntry>& row,
                         std::int64_t window_size) {
    const std::int64_t n = window_size * window_size;
    std::vector<double> grid(static_cast<std::size_t>(n), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& e : row) {
        if (e.col < 0 || e.col >= n) throw std::invalid_argument("write_attention_pgm: column out of range");
        grid[static_cast<std::size_t>(e.col)] = e.weight;
        lo = std::min(lo, e.weight);
        hi = std::max(hi, e.weight);
    }
    if (row.empty()) lo = hi = 0.0;
    lo = std::min(lo, 0.0);  // absent entries render black
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_attention_pgm: cannot open " + path);
    os << "P5\n" << window_size << " " << window_size << "\n65535\n";
    for (double v : grid) {
        const auto px = static_cast<std::uint32_t>(std::llround((v - lo) / span * 65535.0));
        const unsigned char b[2] = {static_cast<unsigned char>((px >> 8) & 0xff),
                                    static_cast<unsigned char>(px & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!os) throw std::runtime_error("write_attention_pgm: write failed for " + path);
}

std::string render_run_stats_csv(const CascadeTrace& trace) {
    std::ostringstream os;
    os << "layer,parity,head,mean_support,max_support,mean_entropy,score_macs,aggregate_macs\n";
    os.precision(12);
    for (const auto& lt : trace.layers) {
        for (std::int64_t h = 0; h < trace.heads; ++h) {
            std::uint64_t rows = 0, support = 0, score = 0, agg = 0;
            std::int64_t max_support = 0;
            double entropy = 0.0;
            for (std::int64_t win = 0; win < lt.num_windows; ++win) {
                const auto& c = lt.cells[static_cast<std::size_t>(win * trace.heads + h)];
                rows += static_cast<std::uint64_t>(c.rows);
                support += c.support_total;
                max_support = std::max(max_support, c.support_max);
                entropy += c.entropy_sum;
                score += c.score_macs;
                agg += c.aggregate_macs;
            }
            os << lt.layer << "," << lt.parity << "," << h << ","
               << static_cast<double>(support) / static_cast<double>(rows) << "," << max_support
               << "," << entropy / static_cast<double>(rows) << "," << score << "," << agg << "\n";
        }
    }
    return os.str();
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::int64_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: missing '=' at " + path + ":" + std::to_string(lineno));
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace pfa
