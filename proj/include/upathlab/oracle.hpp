#ifndef UPATHLAB_ORACLE_HPP
#define UPATHLAB_ORACLE_HPP

#include "upathlab/engine.hpp"
#include "upathlab/upath.hpp"

namespace upathlab {

struct SpaceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AttributionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Static privacy policy over AMEM words; unlabeled words are low.
struct PrivacyPolicy {
    std::set<int> high_words;
    bool is_high(int w) const { return high_words.count(w) != 0; }
};

enum class ObserverId { RC, RUpath };

// Per-cycle observations of one simulated trace under both observer models.
struct ObservedTrace {
    Trace trace;
    std::vector<uint8_t> commit;      // R_C: commit net value per cycle
    std::vector<uint32_t> occupied;   // R_upath: set of occupied PLs per cycle
};

ObservedTrace observe_run(const Netlist& nl, const ProgramSpace& space, const Program& p,
                          const std::map<int, uint64_t>& amem_words, int horizon);

struct Violation {
    std::vector<std::string> program;
    PrivacyPolicy policy;
    std::map<int, uint64_t> sigma;        // low-equivalent pair of initial
    std::map<int, uint64_t> sigma_prime;  // architectural states
    int divergence_cycle = -1;            // earliest k with differing observations
    ObserverId observer = ObserverId::RUpath;
    // Attribution per the two-trace case analysis.
    bool attributed = false;
    bool delayed_observation = false;
    int decision_cycle = -1;  // the same-instruction divergence step
    std::string transponder;  // mnemonic
    std::string src;          // decision source PL
    std::set<std::string> dst, dst_prime;
};

struct OracleOptions {
    ObserverId observer = ObserverId::RUpath;
    std::vector<int> policy_words;  // words eligible for the single H label
    size_t max_cases = 200000000;   // (p, pi, sigma-pair) budget
    int horizon = 44;
    int jobs = 1;
    bool attribute = true;
};

// Ground-truth two-trace check: enumerates bounded straight-line programs,
// single-H policies, and low-equivalent initial-state pairs; reports every
// case whose observation traces diverge, with the earliest divergence cycle.
std::vector<Violation> check_sc_safe(const Netlist& nl, const ProgramSpace& space,
                                     const OracleOptions& opts);

// Fills the attribution fields of a violation from its two traces: the
// same-instruction (pc-matched) divergence (transponder, src, dst, dst'),
// scanning backwards from the observation divergence when the diverging
// occupants differ (delayed observation). Throws AttributionFailed when no
// same-instruction decision divergence exists.
void attribute_violation(const Netlist& nl, const ProgramSpace& space, Violation& v);

// Exhaustive-simulation μpath enumeration: the independent route used to
// validate synthesis. Shares only the simulator and the con predicate.
std::vector<MuPath> oracle_upaths(const Netlist& nl, const ProgramSpace& space,
                                  const std::string& iuv, int horizon = 44);

// All straight-line programs over the alphabet up to max_program_len.
std::vector<std::vector<std::string>> all_programs(const ProgramSpace& space);
// All varied-word assignments over the operand domain.
std::vector<std::map<int, uint64_t>> all_sigmas(const ProgramSpace& space);

std::string violations_to_json(const std::vector<Violation>& vs, uint64_t env_fingerprint);

}  // namespace upathlab

#endif
