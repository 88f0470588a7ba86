#include "upathlab/designs.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace upathlab {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw NetlistError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

std::string design_dir() {
    if (const char* env = std::getenv("UPATHLAB_DESIGN_DIR")) return env;
    return UPATHLAB_DESIGN_DIR;
}

ProgramSpace toy_program_space() {
    ProgramSpace s;
    s.isa = parse_encodings(slurp(design_dir() + "/toy.isa"));
    s.alphabet = {"NOP", "ADD", "SUB", "MUL", "XOR", "LD", "ST", "BEQ"};
    s.canonical_fields = {
        {"NOP", {}},
        {"ADD", {{"rd", 3}, {"rs1", 1}, {"rs2", 2}}},
        {"SUB", {{"rd", 3}, {"rs1", 1}, {"rs2", 2}}},
        {"MUL", {{"rd", 3}, {"rs1", 1}, {"rs2", 2}}},
        {"XOR", {{"rd", 3}, {"rs1", 1}, {"rs2", 2}}},
        {"LD", {{"rd", 3}, {"addr", 2}}},
        {"ST", {{"addr", 1}, {"data", 2}}},
        {"BEQ", {{"rs1", 1}, {"rs2", 2}}},
    };
    s.operand_domain = {0, 1, 2, 255};
    s.varied_words = {1, 2};  // backing words of r1/r2, the canonical operand registers
    s.max_program_len = 3;
    return s;
}

int operand_slot(const std::string& mnemonic, const std::string& field) {
    if (mnemonic == "LD") return field == "addr" ? 0 : -1;
    if (mnemonic == "ST") return field == "addr" ? 0 : field == "data" ? 1 : -1;
    if (mnemonic == "NOP") return -1;
    if (field == "rs1") return 0;
    if (field == "rs2") return 1;
    return -1;
}

std::vector<std::string> operand_fields(const std::string& mnemonic) {
    if (mnemonic == "NOP") return {};
    if (mnemonic == "LD") return {"addr"};
    if (mnemonic == "ST") return {"addr", "data"};
    return {"rs1", "rs2"};
}

std::vector<std::string> list_design_ids() {
    return {"zskip-mul", "op-pack", "st2ld", "mini-cache"};
}

DesignInfo load_design(const std::string& id_or_path) {
    DesignInfo d;
    std::string path = id_or_path;
    if (path.find('/') == std::string::npos && path.find(".nl") == std::string::npos)
        path = design_dir() + "/" + id_or_path + ".nl";
    d.path = path;
    d.netlist = parse_netlist(slurp(path));
    d.id = d.netlist.design_name.empty() ? id_or_path : d.netlist.design_name;

    d.default_env.space = toy_program_space();
    d.default_env.cycle_bound = 44;
    d.default_env.state_budget = 6000000;

    // Where operand values live when introduced: the register-read or issue
    // stage of each design.
    if (d.id == "op-pack")
        d.operand_stage_fsm = "id";
    else if (d.id == "zskip-mul")
        d.operand_stage_fsm = "scb";
    else
        d.operand_stage_fsm = "iss";
    if (!d.netlist.fsm(d.operand_stage_fsm))
        d.operand_stage_fsm = d.netlist.annotations.mufsms.empty()
                                  ? ""
                                  : d.netlist.annotations.mufsms.front().id;
    return d;
}

std::vector<DesignInfo> load_all_designs() {
    std::vector<DesignInfo> out;
    for (const auto& id : list_design_ids()) out.push_back(load_design(id));
    return out;
}

Program make_program(const std::vector<std::string>& mnemonics) {
    static const ProgramSpace space = toy_program_space();
    Program p;
    for (const auto& m : mnemonics) {
        ProgramInstr pi;
        pi.mnemonic = m;
        auto it = space.canonical_fields.find(m);
        if (it == space.canonical_fields.end()) throw UnknownInstruction(m);
        pi.fields = it->second;
        p.instrs.push_back(pi);
    }
    return p;
}

}  // namespace upathlab
