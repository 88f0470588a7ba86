#ifndef UPATHLAB_UPATH_HPP
#define UPATHLAB_UPATH_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "upathlab/netlist.hpp"

namespace upathlab {

// A non-idle control-FSM state. Occupancy of a PL by a dynamic instruction
// means: the FSM's pcr holds the instruction's pc and its vars equal `state`.
struct PerformingLocation {
    std::string fsm;
    std::vector<uint64_t> state;
    std::string name;  // display name (annotated or derived)

    auto operator<=>(const PerformingLocation& o) const = default;
};

// Indexed table of candidate PLs for a design (all non-idle valuations of
// every annotated FSM's vars). Bitmask-indexed; at most 32 PLs per design.
class PlTable {
public:
    explicit PlTable(const Netlist& nl);

    int count() const { return static_cast<int>(pls_.size()); }
    const PerformingLocation& pl(int i) const { return pls_[i]; }
    int index_of_name(const std::string& name) const;  // -1 if absent

    // Mask of PLs visited by the instruction with program counter `pc`.
    uint32_t visit_mask_pc(const std::vector<uint64_t>& regs, uint64_t pc) const;
    // Mask of PLs occupied by any instruction (pcr nonzero).
    uint32_t occupied_mask(const std::vector<uint64_t>& regs) const;
    // True if any pcr holds `pc` (the instruction is in-flight).
    bool in_flight(const std::vector<uint64_t>& regs, uint64_t pc) const;

    std::set<std::string> names(uint32_t mask) const;
    std::string mask_str(uint32_t mask) const;

private:
    struct Slot {
        int pcr_reg;
        std::vector<int> var_regs;
        std::vector<uint64_t> state;
    };
    std::vector<PerformingLocation> pls_;
    std::vector<Slot> slots_;
    std::vector<int> all_pcrs_;
};

// One synthesized μpath: a Reachable PL Set together with its revisit
// annotations, happens-before edge relation, a representative concrete
// visit sequence, and the per-source family of exact next-step PL sets.
struct MuPath {
    std::string instruction;
    std::set<std::string> support;                 // PL names
    std::set<std::string> consec_revisit;          // PL(1)/PL(l) duplication
    std::set<std::string> nonconsec_revisit;
    std::set<std::pair<std::string, std::string>> edges;  // one-cycle HB, con-gated
    std::vector<std::set<std::string>> rep_v;      // representative V (shortest witness)
    std::map<std::string, std::set<std::set<std::string>>> next_sets;
    std::map<std::string, std::set<int>> revisit_counts;  // filled on request
    int latency = 0;  // happens-before edges from fetch to the final step

    // Set identity: (support, revisit annotations, edge relation).
    auto identity() const {
        return std::tie(support, consec_revisit, nonconsec_revisit, edges);
    }
    bool operator<(const MuPath& o) const { return identity() < o.identity(); }
    bool operator==(const MuPath& o) const { return identity() == o.identity(); }
};

// Per-instruction dominates/exclusive relations over IUV PLs.
struct RelationTables {
    std::set<std::pair<std::string, std::string>> dominates;  // ordered
    std::set<std::pair<std::string, std::string>> exclusive;  // stored both ways
};

}  // namespace upathlab

#endif
