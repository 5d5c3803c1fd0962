#ifndef PFA_VERIFY_HPP
#define PFA_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace pfa {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;  // max diffs, or the failing coordinate
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    int threads = 1;
    bool renormalize_after_topk = false;
    // Harness self-test: perturbs one sparse weight by 1e-6 inside the
    // differential comparison; the run must then fail and name the spot.
    bool inject_fault = false;
};

/// Oracle-equivalence and invariant suites. Every entry must pass for a
/// clean exit.
std::vector<CheckResult> run_verification(const VerifyOptions& opt);

std::string render_verify_csv(const std::vector<CheckResult>& results);

}  // namespace pfa

#endif
