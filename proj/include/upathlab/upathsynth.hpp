#ifndef UPATHLAB_UPATHSYNTH_HPP
#define UPATHLAB_UPATHSYNTH_HPP

#include "upathlab/engine.hpp"
#include "upathlab/upath.hpp"

namespace upathlab {

struct NotARevisitPl : std::runtime_error {
    explicit NotARevisitPl(const std::string& pl)
        : std::runtime_error("PL not visited in this upath: " + pl) {}
};

// Step 1: all non-idle FSM valuations whose occupancy by some instruction is
// reachable under env.
std::set<PerformingLocation> enumerate_duv_pls(const Netlist& nl, const PropertyEnv& env,
                                               int jobs = 1);

// Step 2: the subset of DUV PLs visitable by a dynamic instance of iuv.
std::set<PerformingLocation> enumerate_iuv_pls(const Netlist& nl, const std::string& iuv,
                                               const PropertyEnv& env, int jobs = 1);

// Step 3: dominates/exclusive relations over the IUV PLs from cover queries.
RelationTables build_relations(const Netlist& nl, const std::string& iuv,
                               const std::set<PerformingLocation>& iuv_pls,
                               const PropertyEnv& env, int jobs = 1);

// Step 3b: the power set of IUV PLs filtered by the relations.
std::vector<std::set<std::string>> candidate_pl_sets(const std::set<PerformingLocation>& iuv_pls,
                                                     const RelationTables& relations);

// Step 4: is some execution of iuv visiting exactly this PL set reachable?
CoverVerdict check_pl_set(const Netlist& nl, const std::string& iuv,
                          const std::set<std::string>& candidate, const PropertyEnv& env);

// Step 4b: which PLs of a Reachable PL Set may be consecutively or
// non-consecutively revisited.
struct RevisitFlags {
    bool consecutive = false;
    bool nonconsecutive = false;
};
std::map<std::string, RevisitFlags> detect_revisits(const Netlist& nl, const std::string& iuv,
                                                    const std::set<std::string>& reachable_set,
                                                    const PropertyEnv& env);

// Step 5: the con predicate and the confirmed one-cycle HB edges per
// Reachable PL Set.
bool con_predicate(const Netlist& nl, const PerformingLocation& a, const PerformingLocation& b);
std::set<std::pair<std::string, std::string>> synth_hb_edges(
    const Netlist& nl, const std::string& iuv, const std::set<std::string>& reachable_set,
    const PropertyEnv& env);

// Step 6 (optional): all consecutive-occupancy run lengths of pl exhibited by
// executions consistent with the μpath. Throws NotARevisitPl when pl is not
// part of the μpath's support.
std::set<int> revisit_cycle_counts(const Netlist& nl, const std::string& iuv, const MuPath& upath,
                                   const std::string& pl, const PropertyEnv& env);

struct SynthOptions {
    bool revisit_counts = false;
    int jobs = 1;
};

struct SynthResult {
    std::vector<MuPath> upaths;
    std::set<PerformingLocation> duv_pls;
    std::set<PerformingLocation> iuv_pls;
    RelationTables relations;
    std::vector<std::set<std::string>> candidates;
    std::vector<std::set<std::string>> reachable_sets;
    bool saturated = true;
    bool any_undetermined = false;
};

// The full pipeline for one instruction.
SynthResult synth_all_upaths(const Netlist& nl, const std::string& iuv, const PropertyEnv& env,
                             const SynthOptions& options = {});

}  // namespace upathlab

#endif
