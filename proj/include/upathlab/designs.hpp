#ifndef UPATHLAB_DESIGNS_HPP
#define UPATHLAB_DESIGNS_HPP

#include "upathlab/engine.hpp"
#include "upathlab/netlist.hpp"

namespace upathlab {

// One bundled toy design plus its checking configuration.
struct DesignInfo {
    std::string id;
    std::string path;
    Netlist netlist;
    // FSM whose pcr identifies the instruction whose operands currently sit
    // in the annotated operand registers (taint introduction trigger).
    std::string operand_stage_fsm;
    PropertyEnv default_env;

    long expectation(const std::string& key, long fallback = -1) const {
        auto it = netlist.expectations.find(key);
        return it == netlist.expectations.end() ? fallback : it->second;
    }
};

// The shared toy ISA with the canonical operand register convention used by
// the checker's program space and the oracle.
ProgramSpace toy_program_space();

// Maps (mnemonic, operand field name) to the operand register slot (0 = a,
// 1 = b); -1 when the instruction has no such operand.
int operand_slot(const std::string& mnemonic, const std::string& field);
// Field names carried by each mnemonic's signature-relevant operands.
std::vector<std::string> operand_fields(const std::string& mnemonic);

std::vector<std::string> list_design_ids();
DesignInfo load_design(const std::string& id_or_path);
std::vector<DesignInfo> load_all_designs();

Program make_program(const std::vector<std::string>& mnemonics);

std::string design_dir();

}  // namespace upathlab

#endif
