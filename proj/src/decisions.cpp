#include "upathlab/decisions.hpp"

#include <map>

namespace upathlab {

DecisionExtraction extract_decisions(const std::vector<MuPath>& upaths) {
    DecisionExtraction out;
    if (upaths.size() < 2) return out;  // no pair of μpaths, no divergence

    const std::string& instr = upaths.front().instruction;
    std::set<std::string> all_pls;
    for (const auto& p : upaths)
        for (const auto& pl : p.support) all_pls.insert(pl);

    for (const auto& src : all_pls) {
        // A decision source is followed by distinct next-set families in at
        // least two μpaths.
        bool diverges = false;
        static const std::set<std::set<std::string>> empty;
        for (size_t i = 0; i < upaths.size() && !diverges; ++i) {
            if (!upaths[i].support.count(src)) continue;
            auto ia = upaths[i].next_sets.find(src);
            const auto& fa = ia == upaths[i].next_sets.end() ? empty : ia->second;
            for (size_t j = i + 1; j < upaths.size(); ++j) {
                if (!upaths[j].support.count(src)) continue;
                auto ib = upaths[j].next_sets.find(src);
                const auto& fb = ib == upaths[j].next_sets.end() ? empty : ib->second;
                if (fa != fb) {
                    diverges = true;
                    break;
                }
            }
        }
        if (!diverges) continue;
        out.sources.insert(src);
        for (const auto& p : upaths) {
            auto it = p.next_sets.find(src);
            if (it == p.next_sets.end()) continue;
            for (const auto& d : it->second) {
                Decision dec;
                dec.instruction = instr;
                dec.src = src;
                dec.dst = d;
                out.decisions.insert(std::move(dec));
            }
        }
    }
    return out;
}

}  // namespace upathlab
