#ifndef UPATHLAB_NETLIST_HPP
#define UPATHLAB_NETLIST_HPP

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace upathlab {

// Combinational cell kinds of the design language. MUX selects its first
// data operand when the select bit is 1.
enum class CellKind { Not, And, Or, Xor, Mux, Eq, Add, Sub, Shift, Const, Slice, Concat };

const char* cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& s);

struct Cell {
    CellKind kind;
    std::vector<int> inputs;  // net ids
    int output = -1;          // net id
    uint64_t value = 0;       // Const payload
    int hi = 0, lo = 0;       // Slice range
};

struct Register {
    std::string name;
    int width = 1;
    uint64_t reset = 0;
    int out_net = -1;
    int next_net = -1;  // -1: register holds its value forever
    int when_net = -1;  // -1: unconditional update when next_net is set
};

// Synchronous read port: the latched output net carries the word addressed
// in the previous cycle.
struct ReadPort {
    int mem = -1;
    int addr_net = -1;
    int out_net = -1;
};

struct WritePort {
    int mem = -1;
    int addr_net = -1;
    int data_net = -1;
    int en_net = -1;
    int pc_net = -1;  // optional: pc of the writing instruction (taint blocking hook)
};

struct Memory {
    std::string name;
    int width = 1;
    int depth = 1;
};

enum class DriverKind { None, Input, Cell, Register, Read };

struct Net {
    std::string name;
    int width = -1;
    DriverKind driver = DriverKind::None;
    int driver_index = -1;  // index into inputs/cells/registers/read_ports
};

struct Input {
    std::string name;
    int width = 1;
    int net = -1;
};

struct Output {
    std::string name;
    int net = -1;
};

// Control FSM identified by the design metadata: a program-counter-valued
// instruction identifying register plus the FSM's state variables.
struct MuFsm {
    std::string id;
    std::string pcr;                              // register name
    std::vector<std::string> vars;                // register names, fixed order
    std::set<std::vector<uint64_t>> idle_states;  // one value per var
};

struct Annotations {
    std::string ifr;     // register holding the fetched encoding
    std::string commit;  // net
    std::string arf;     // memory
    std::string amem;    // memory
    std::vector<std::string> operand_regs;  // slot order: a (rs1/addr), b (rs2/data)
    std::vector<MuFsm> mufsms;
    std::string im_pc;  // register: first-fetch PC
    // Display names for non-idle FSM states, keyed by (fsm id, valuation).
    std::map<std::pair<std::string, std::vector<uint64_t>>, std::string> state_names;
};

struct InstructionField {
    std::string name;  // rd, rs1, rs2, addr, data, imm
    int lo = 0;
    int width = 0;
};

struct InstructionEncoding {
    std::string mnemonic;
    uint64_t pattern = 0;  // fixed opcode bits
    uint64_t mask = 0;     // 1 where pattern bits are fixed
    int width = 16;
    std::vector<InstructionField> fields;

    uint64_t encode(const std::map<std::string, uint64_t>& field_values) const;
    const InstructionField* field(const std::string& name) const;
};

struct NetlistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SyntaxError : NetlistError {
    int line;
    SyntaxError(int line_, const std::string& what)
        : NetlistError("line " + std::to_string(line_) + ": " + what), line(line_) {}
};
struct CombinationalCycle : NetlistError {
    std::vector<std::string> nets;
    explicit CombinationalCycle(std::vector<std::string> ns);
};
struct MultipleDrivers : NetlistError {
    std::string net;
    explicit MultipleDrivers(const std::string& n) : NetlistError("net driven more than once: " + n), net(n) {}
};
struct UnknownAnnotationTarget : NetlistError {
    std::string name;
    explicit UnknownAnnotationTarget(const std::string& n)
        : NetlistError("annotation names unknown element: " + n), name(n) {}
};
struct UnknownRegister : NetlistError {
    explicit UnknownRegister(const std::string& n) : NetlistError("unknown register: " + n) {}
};

class Netlist {
public:
    std::string design_name;
    std::vector<Net> nets;
    std::vector<Cell> cells;
    std::vector<Register> registers;
    std::vector<Memory> memories;
    std::vector<ReadPort> read_ports;
    std::vector<WritePort> write_ports;
    std::vector<Input> inputs;
    std::vector<Output> outputs;
    Annotations annotations;
    std::map<std::string, long> expectations;  // header claims, re-derived in tests
    std::vector<int> topo_cells;               // evaluation order

    int net_id(const std::string& name) const;          // -1 if absent
    int net_id_checked(const std::string& name) const;  // throws
    int register_id(const std::string& name) const;     // -1 if absent
    int memory_id(const std::string& name) const;
    int input_id(const std::string& name) const;
    const MuFsm* fsm(const std::string& id) const;

    uint64_t net_mask(int net) const { return width_mask(nets[net].width); }
    static uint64_t width_mask(int width) {
        return width >= 64 ? ~0ull : ((1ull << width) - 1);
    }

    // Validates widths, single drivers, annotation targets; computes the
    // topological cell order. Throws on violations.
    void finalize();

    // Stable content hash of the printed form, for env fingerprints.
    uint64_t content_hash() const;

private:
    mutable std::map<std::string, int> net_index_;
    void rebuild_index() const;
};

// True iff some output bit of a register in `from` reaches, through
// combinational cells only, the next-state input (data or enable) of some
// register in `to`.
bool comb_cone(const Netlist& nl, const std::set<std::string>& from, const std::set<std::string>& to);

std::vector<InstructionEncoding> parse_encodings(const std::string& text);
Netlist parse_netlist(const std::string& text);
std::string print_netlist(const Netlist& nl);
std::string print_encodings(const std::vector<InstructionEncoding>& encs);

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace upathlab

#endif
