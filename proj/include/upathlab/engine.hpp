#ifndef UPATHLAB_ENGINE_HPP
#define UPATHLAB_ENGINE_HPP

#include <functional>
#include <optional>

#include "upathlab/netlist.hpp"
#include "upathlab/sim.hpp"
#include "upathlab/upath.hpp"

namespace upathlab {

struct InvalidEnv : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownInstruction : std::runtime_error {
    explicit UnknownInstruction(const std::string& m) : std::runtime_error("unknown instruction: " + m) {}
};

enum class UndeterminedPolicy { AsUnreachable, AsReachable };
enum class Verdict { Reachable, Unreachable, Undetermined };

const char* verdict_name(Verdict v);
const char* policy_name(UndeterminedPolicy p);

// The bounded context space the checker explores: straight-line instruction
// streams over an alphabet with canonical operand register fields, from
// initial architectural states enumerated over the operand domain.
struct ProgramSpace {
    std::vector<InstructionEncoding> isa;
    std::vector<std::string> alphabet;
    std::map<std::string, std::map<std::string, uint64_t>> canonical_fields;
    std::vector<uint64_t> operand_domain = {0, 1, 2, 255};
    std::vector<int> varied_words = {1, 2, 15};  // AMEM words enumerated over the domain
    int max_program_len = 3;

    const InstructionEncoding& encoding(const std::string& mnemonic) const;
    uint64_t encode(const std::string& mnemonic) const;  // with canonical fields
};

struct PropertyEnv {
    ProgramSpace space;
    int cycle_bound = 48;
    size_t state_budget = 6000000;
    UndeterminedPolicy undetermined = UndeterminedPolicy::AsUnreachable;

    void validate() const;  // throws InvalidEnv
    uint64_t fingerprint(const Netlist& nl) const;
};

// Initial architectural state: reset microarchitectural state, the given
// AMEM word assignment, and the register backing convention arf[i] = amem[i].
MachineState initial_state(const Netlist& nl, const std::map<int, uint64_t>& amem_words);

// All initial states spanned by env (varied words over the operand domain).
std::vector<MachineState> seed_states(const Netlist& nl, const PropertyEnv& env);

// A replayable checker witness: seed + instruction stream + designations.
struct Witness {
    std::map<int, uint64_t> amem_words;
    std::vector<std::string> program;  // mnemonics, fetched in order
    int length = 0;                    // cycles up to and including the hit
    uint64_t iuv_pc = 0;
    uint64_t t_pc = 0, p_pc = 0;

    Program to_program(const ProgramSpace& space) const;
};

struct CoverVerdict {
    Verdict verdict = Verdict::Undetermined;
    std::optional<Witness> witness;
    bool saturated = false;
    size_t states_explored = 0;
    std::string reason;  // bound | budget, when undetermined

    bool reachable() const { return verdict == Verdict::Reachable; }
    // Applies the configured undetermined policy.
    bool decided_reachable(UndeterminedPolicy p) const {
        return verdict == Verdict::Reachable ||
               (verdict == Verdict::Undetermined && p == UndeterminedPolicy::AsReachable);
    }
};

// Per-transition view handed to predicates. Lookback is one state; sticky
// per-episode facts come from the tracker fields.
struct TraceCtx {
    const Netlist* nl = nullptr;
    const PlTable* pls = nullptr;
    const MachineState* prev = nullptr;
    const MachineState* cur = nullptr;
    int cycle = 0;  // index of `cur` within the trace
    // Tracked-instruction facts (valid when the property tracks an IUV).
    uint64_t iuv_pc = 0;     // 0: not designated
    uint32_t prev_mask = 0;  // PLs the IUV visited in `prev`
    uint32_t cur_mask = 0;   // PLs the IUV visits in `cur`
    uint32_t visited = 0;    // sticky over the episode, including cur
    uint32_t consec_mask = 0;     // PLs visited in >= 2 consecutive cycles so far
    uint32_t nonconsec_mask = 0;  // PLs re-entered after an absence so far
    bool materialized = false;
    bool dematerialized = false;  // true on the transition that closes the episode
    uint64_t t_pc = 0, p_pc = 0;
    int t_fetch_idx = -1, p_fetch_idx = -1;  // 0-based fetch order
    bool t_dematerialized = false;
    bool t_materialized = false;
    // PLs whose first visit by the tracked instruction happened strictly
    // after the T instance dematerialized.
    uint32_t t_gone_at_first_visit = 0;
    int fetched = 0;
    // Lazily reconstructs a replayable witness ending at this transition.
    std::function<Witness()> witness;
};

using TracePredicate = std::function<bool(const TraceCtx&)>;

struct Property {
    std::string iuv;  // mnemonic to track; empty: no tracking
    // Classify-mode designations: additionally track one T and one P instance.
    std::string t_mnemonic, p_mnemonic;
    bool same_t_p = false;  // case 1: the designated T and P are one instruction
    TracePredicate cover;   // required
    TracePredicate assume;  // optional; false prunes the destination state
    // Restrict the tracked IUV to visit only these PLs (0: no restriction).
    uint32_t context_mask = 0;
    bool prune_after_episode = true;
    Stepper stepper;  // optional custom transition (instrumented runs)
    // Drives additional inputs per transition (taint control inputs); the
    // context carries the post-designation t/p program counters.
    std::function<void(InputValuation&, uint64_t t_pc, uint64_t p_pc)> drive;
};

// Searches for any execution trace within env satisfying the assumes and the
// cover predicate. Unreachable only when the reachable space under env was
// exhausted without a witness.
CoverVerdict check_cover(const Netlist& nl, const PropertyEnv& env, const Property& prop);

// BFS closure of machine states reachable from the seeds under env's input
// space. Saturation flag false when the state budget or cycle bound was hit.
struct FixpointResult {
    std::set<std::string> state_keys;
    size_t count = 0;
    bool saturated = false;
};
FixpointResult reachable_fixpoint(const Netlist& nl, const PropertyEnv& env);

// One closed materialize..dematerialize episode of a tracked instruction.
struct EpisodeSummary {
    uint32_t support = 0;
    uint32_t consec = 0;     // PLs with >= 2 consecutive visits
    uint32_t nonconsec = 0;  // PLs revisited after an absence
    std::vector<uint64_t> adj;  // packed (prev_mask << 32) | cur_mask transitions
    std::vector<uint32_t> rep_v;  // concrete per-cycle visit masks
    Witness witness;
    bool operator<(const EpisodeSummary& o) const;
};

struct EpisodeEnumeration {
    std::vector<EpisodeSummary> episodes;  // deduplicated, shortest witness kept
    bool saturated = false;
    size_t states_explored = 0;
};

// Enumerates all distinct episodes of `iuv` within env (optionally restricted
// to a support context). The foundation for μpath synthesis steps 4-6.
EpisodeEnumeration enumerate_episodes(const Netlist& nl, const PropertyEnv& env,
                                      const std::string& iuv, uint32_t context_mask = 0,
                                      const Stepper& stepper = {});

// Raw form: fires the callback once per closing episode, without folding;
// every distinct concrete visit sequence is reported.
bool enumerate_episodes_raw(const Netlist& nl, const PropertyEnv& env, const std::string& iuv,
                            uint32_t context_mask, const Stepper& stepper,
                            const std::function<void(const EpisodeSummary&)>& cb);

// Replays a witness through the plain simulator; returns the trace.
Trace replay_witness(const Netlist& nl, const ProgramSpace& space, const Witness& w, int horizon);

// Serializable property batch (External Interfaces).
struct PropertySpec {
    std::string id;
    std::string kind;  // duv-pl | iuv-pl | dominates | exclusive | pl-set
    std::string iuv;
    std::vector<std::string> pls;
};
struct VerdictRecord {
    std::string id;
    Verdict verdict;
    bool has_witness = false;
    std::string witness_ref;
    uint64_t env_fingerprint = 0;
};
std::vector<VerdictRecord> run_property_batch(const Netlist& nl, const PropertyEnv& env,
                                              const std::vector<PropertySpec>& batch, int jobs = 1);
std::string property_batch_to_json(const std::vector<PropertySpec>& batch);
std::vector<PropertySpec> property_batch_from_json(const std::string& text);
std::string verdicts_to_json(const std::vector<VerdictRecord>& verdicts);

}  // namespace upathlab

#endif
