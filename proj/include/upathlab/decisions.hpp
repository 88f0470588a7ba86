#ifndef UPATHLAB_DECISIONS_HPP
#define UPATHLAB_DECISIONS_HPP

#include "upathlab/upath.hpp"

namespace upathlab {

// A divergence pinpointed between μpaths of one instruction: the source PL
// and one exact next-step destination PL set. The empty destination set
// encodes dematerialization.
struct Decision {
    std::string instruction;
    std::string src;
    std::set<std::string> dst;

    auto operator<=>(const Decision& o) const = default;
};

struct DecisionExtraction {
    std::set<std::string> sources;
    std::set<Decision> decisions;
};

// Sources are PLs with at least two distinct next-step PL sets across the
// instruction's μpaths; a single μpath yields no decisions.
DecisionExtraction extract_decisions(const std::vector<MuPath>& upaths);

}  // namespace upathlab

#endif
