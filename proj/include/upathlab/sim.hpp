#ifndef UPATHLAB_SIM_HPP
#define UPATHLAB_SIM_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "upathlab/netlist.hpp"

namespace upathlab {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WidthMismatch : SimError {
    using SimError::SimError;
};
struct HorizonZero : SimError {
    HorizonZero() : SimError("horizon must be at least 1") {}
};
struct NonUniquePc : SimError {
    using SimError::SimError;
};

// Full machine state: registers, memory contents, latched read-port data,
// plus auxiliary words used by taint instrumentation. Equality and hashing
// are structural.
struct MachineState {
    std::vector<uint64_t> regs;
    std::vector<std::vector<uint64_t>> mems;
    std::vector<uint64_t> rdata;
    std::vector<uint64_t> aux;

    bool operator==(const MachineState& o) const = default;
    uint64_t hash() const;
    std::string key() const;  // packed bytes, for hashed sets
};

struct InputValuation {
    std::vector<uint64_t> values;  // one per netlist input, in declaration order
    bool operator==(const InputValuation& o) const = default;
};

struct Trace {
    MachineState initial;
    std::vector<InputValuation> inputs;
    std::vector<MachineState> states;  // states[0] == initial; one extra per input

    std::string dump(const Netlist& nl) const;  // per-cycle register/memory deltas
};

MachineState reset_state(const Netlist& nl);

// Combinational evaluation of all nets for one cycle.
void eval_nets(const Netlist& nl, const MachineState& s, const InputValuation& in,
               std::vector<uint64_t>& nets);

// The unique successor under the netlist's transition relation.
MachineState step(const Netlist& nl, const MachineState& s, const InputValuation& in);

uint64_t net_value(const Netlist& nl, const MachineState& s, const InputValuation& in,
                   const std::string& net);

using Stepper = std::function<MachineState(const MachineState&, const InputValuation&)>;

struct ProgramInstr {
    std::string mnemonic;
    std::map<std::string, uint64_t> fields;
    int pc = -1;  // assigned at fetch
};

struct Program {
    std::vector<ProgramInstr> instrs;
    std::map<int, uint64_t> amem_init;  // AMEM word index -> value
};

// Drives the documented fetch protocol: inputs `instr`/`ivalid`, design net
// `fetch_rdy`, register `impc`. Instructions are injected back to back;
// bubbles follow once the program is exhausted.
Trace run_program(const Netlist& nl, const std::vector<InstructionEncoding>& isa, const Program& p,
                  const MachineState& init, int horizon);

// Same protocol against an arbitrary stepper (used to replay instrumented runs).
Trace run_program_with(const Netlist& nl, const std::vector<InstructionEncoding>& isa, const Program& p,
                       const MachineState& init, int horizon, const Stepper& stepper);

}  // namespace upathlab

#endif
