#ifndef PFA_IO_HPP
#define PFA_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "pfa/cascade.hpp"
#include "pfa/window.hpp"

namespace pfa {

/// Raw tensor interchange: little-endian "PFT1", u32 h, u32 w, u32 c,
/// then h*w*c doubles, channel-last.
void write_tensor(const std::string& path, const FeatureMap& f);
FeatureMap read_tensor(const std::string& path);

/// Binary P5 PGM, 16-bit, weights min-max scaled. The row covers the
/// window's N = W*W key tokens and is rendered as a W x W grid; absent
/// entries render black.
void write_attention_pgm(const std::string& path, const std::vector<SparseEntry>& row,
                         std::int64_t window_size);

/// Per-(layer, head) run statistics, aggregated across windows.
/// Schema: layer,parity,head,mean_support,max_support,mean_entropy,score_macs,aggregate_macs
std::string render_run_stats_csv(const CascadeTrace& trace);

/// Flat key=value config text, '#' comments. Later keys win.
std::map<std::string, std::string> parse_config_file(const std::string& path);

}  // namespace pfa

#endif
