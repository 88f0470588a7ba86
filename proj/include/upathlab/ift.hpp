#ifndef UPATHLAB_IFT_HPP
#define UPATHLAB_IFT_HPP

#include "upathlab/netlist.hpp"
#include "upathlab/sim.hpp"

namespace upathlab {

struct NotAnOperandRegister : std::runtime_error {
    explicit NotAnOperandRegister(const std::string& r)
        : std::runtime_error(r + " is not an annotated operand register") {}
};
struct WrongMode : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class IftMode { OneBit, TwoBit };

// The design augmented with cell-level taint tracking circuitry. Shadow
// logic consists of ordinary cells and registers over nets prefixed `t0.`
// (lower plane) and, in two-bit mode, `t1.` (upper plane), so the plain
// simulator executes it. Taint introduction, architectural blocking, and the
// dynamic-influence flush window are driven at run time through dedicated
// inputs:
//   taint.tpc    pc of the transmitter instance i_T (0: none)
//   taint.ppc    pc of the transponder instance i_P (0: none)
//   taint.sel_a / taint.sel_b  introduce at operand register a / b
//   taint.block  clear taint at ARF/AMEM write ports for i_T's results
//   taint.flush  two-bit mode: upper-plane introduction for instructions
//                fetched after i_T and before i_P
struct TaintedNetlist {
    Netlist netlist;
    IftMode mode = IftMode::OneBit;
    std::string operand_stage_fsm;       // stage whose pcr triggers introduction
    std::map<int, int> reg_lo, reg_hi;   // base register -> taint register
    std::map<int, int> mem_lo, mem_hi;   // base memory -> taint memory
    int in_tpc = -1, in_ppc = -1, in_sel_a = -1, in_sel_b = -1, in_block = -1, in_flush = -1;

    struct Controls {
        bool introduce = false;
        int slot = -1;  // 0 = operand a, 1 = operand b
        bool block = false;
        bool flush = false;
    } controls;

    // Values for the taint control inputs given the designated instances.
    void drive(InputValuation& in, uint64_t t_pc, uint64_t p_pc) const;

    // OR of the lower-plane taint bits over the FSM's vars registers.
    uint64_t fsm_taint_lo(const MachineState& s, const std::string& fsm_id) const;
    uint64_t reg_taint_lo(const MachineState& s, const std::string& reg) const;
    uint64_t reg_taint_hi(const MachineState& s, const std::string& reg) const;
    // OR of lower-plane taint over every annotated FSM's vars.
    uint64_t all_fsm_taint_lo(const MachineState& s) const;
};

// Builds the shadow circuitry. The base behavior is unchanged: taint cells
// never feed base nets, and with all taint inputs at zero the taint state
// stays identically zero.
TaintedNetlist instrument(const Netlist& nl, IftMode mode,
                          const std::string& operand_stage_fsm = "");

// Constrain the instrumented design so the taint bits of `target` are forced
// high exactly while the transmitter instance occupies the operand stage,
// and all other introduction is disabled.
TaintedNetlist introduce_taint(const TaintedNetlist& tnl, const std::string& target);

// Clears taint at ARF/AMEM write ports for the transmitter's results.
TaintedNetlist block_architectural_flow(const TaintedNetlist& tnl);

// Two-bit mode: upper-plane taint for the operands of every instruction
// fetched after i_T and before i_P. Throws WrongMode in one-bit mode.
TaintedNetlist flush_dynamic_taint(const TaintedNetlist& tnl);

}  // namespace upathlab

#endif
