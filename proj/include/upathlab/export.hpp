#ifndef UPATHLAB_EXPORT_HPP
#define UPATHLAB_EXPORT_HPP

#include "upathlab/decisions.hpp"
#include "upathlab/upath.hpp"

namespace upathlab {

struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Column-per-μpath DOT rendering: one node per (PL, visit instance), with
// consecutively revisited PLs duplicated as PL(1)/PL(l) joined by a dashed
// summary edge; solid edges are one-cycle happens-before relationships.
// Decision sources render orange, destinations blue.
std::string to_dot(const std::vector<MuPath>& upaths,
                   const DecisionExtraction* decisions = nullptr);

std::string upaths_to_json(const std::vector<MuPath>& upaths, uint64_t env_fingerprint);
std::vector<MuPath> upaths_from_json(const std::string& text);

std::string decisions_to_json(const DecisionExtraction& d, uint64_t env_fingerprint);
DecisionExtraction decisions_from_json(const std::string& text);

}  // namespace upathlab

#endif
