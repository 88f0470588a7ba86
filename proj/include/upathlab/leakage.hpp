#ifndef UPATHLAB_LEAKAGE_HPP
#define UPATHLAB_LEAKAGE_HPP

#include <optional>

#include "upathlab/decisions.hpp"
#include "upathlab/designs.hpp"
#include "upathlab/engine.hpp"
#include "upathlab/ift.hpp"

namespace upathlab {

struct IncompatibleCase : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime condition on the (i_T, i_P) pair under which a transmitter is typed.
enum class ClassifyCase { Intrinsic, DynamicOlder, DynamicYounger, Static };
enum class TransmitterType { N, DO, DY, S };
const char* transmitter_type_name(TransmitterType t);  // N, D_O, D_Y, S
TransmitterType type_of_case(ClassifyCase c);

struct SignatureInput {
    std::string transmitter;
    TransmitterType type = TransmitterType::N;
    std::string operand;  // field name: rs1, rs2, addr, data

    auto operator<=>(const SignatureInput& o) const = default;
};

struct DecisionTag {
    Decision decision;
    SignatureInput input;
    Witness witness;

    bool operator<(const DecisionTag& o) const {
        return std::tie(decision, input) < std::tie(o.decision, o.input);
    }
};

struct LeakageSignature {
    std::string name;  // transponder ++ "_" ++ src
    std::string transponder;
    std::string src;
    std::set<std::set<std::string>> range;  // all decision destinations at src
    std::set<SignatureInput> inputs;
    std::set<Decision> tagged_decisions;
    std::set<std::string> implicit_inputs;  // diagnostics, best effort

    std::string render() const;  // Fig.-style header: dst P_src(T^N i0, ...)
};

enum class ChannelKind { Static, Dynamic, Both };
const char* channel_kind_name(ChannelKind k);

// One cover query of the classification step: is there an execution where
// i_P exhibits this decision with a tainted destination, with i_T related to
// i_P per the case?
bool classify(const TaintedNetlist& tnl, const DesignInfo& design, const std::string& P,
              const Decision& decision, const std::string& T, const std::string& op,
              ClassifyCase c, const PropertyEnv& env, Witness* witness = nullptr,
              bool* undetermined = nullptr);

std::optional<LeakageSignature> assemble_signature(const std::string& P, const std::string& src,
                                                   const std::set<Decision>& decisions_at_src,
                                                   const std::vector<DecisionTag>& tags);

ChannelKind classify_channel(const LeakageSignature& sig);

struct SignatureSynthesis {
    std::vector<LeakageSignature> signatures;
    std::vector<DecisionTag> tags;
    bool any_undetermined = false;
    size_t classify_queries = 0;
};

// Full classification over decisions x transmitters x operands x cases for
// every candidate transponder of the design.
SignatureSynthesis synth_signatures(const DesignInfo& design,
                                    const std::map<std::string, std::vector<MuPath>>& upaths,
                                    const PropertyEnv& env, int jobs = 1);

struct ContractView {
    std::string contract;   // defense id
    std::string component;  // leakage contract component
    // Projection of signatures onto the component's checked columns.
    std::vector<std::map<std::string, std::string>> rows;
};

std::vector<ContractView> derive_contracts(const std::vector<LeakageSignature>& signatures,
                                           const std::map<std::string, std::vector<MuPath>>& upaths);

std::string signatures_to_json(const std::vector<LeakageSignature>& sigs, uint64_t env_fingerprint);
std::vector<LeakageSignature> signatures_from_json(const std::string& text);
std::string contracts_to_json(const std::vector<ContractView>& views, uint64_t env_fingerprint);

}  // namespace upathlab

#endif
