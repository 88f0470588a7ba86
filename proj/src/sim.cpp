#include "upathlab/sim.hpp"

#include <cstring>
#include <sstream>

namespace upathlab {

uint64_t MachineState::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a64(regs.data(), regs.size() * sizeof(uint64_t), h);
    for (const auto& m : mems) h = fnv1a64(m.data(), m.size() * sizeof(uint64_t), h);
    h = fnv1a64(rdata.data(), rdata.size() * sizeof(uint64_t), h);
    h = fnv1a64(aux.data(), aux.size() * sizeof(uint64_t), h);
    return h;
}

std::string MachineState::key() const {
    std::string out;
    size_t words = regs.size() + rdata.size() + aux.size();
    for (const auto& m : mems) words += m.size();
    out.reserve(words * sizeof(uint64_t));
    auto put = [&](const std::vector<uint64_t>& v) {
        out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(uint64_t));
    };
    put(regs);
    for (const auto& m : mems) put(m);
    put(rdata);
    put(aux);
    return out;
}

MachineState reset_state(const Netlist& nl) {
    MachineState s;
    s.regs.resize(nl.registers.size());
    for (size_t i = 0; i < nl.registers.size(); ++i)
        s.regs[i] = nl.registers[i].reset & Netlist::width_mask(nl.registers[i].width);
    s.mems.resize(nl.memories.size());
    for (size_t i = 0; i < nl.memories.size(); ++i) s.mems[i].assign(nl.memories[i].depth, 0);
    s.rdata.assign(nl.read_ports.size(), 0);
    return s;
}

void eval_nets(const Netlist& nl, const MachineState& s, const InputValuation& in,
               std::vector<uint64_t>& v) {
    v.assign(nl.nets.size(), 0);
    if (in.values.size() != nl.inputs.size()) throw WidthMismatch("input valuation arity mismatch");
    for (size_t i = 0; i < nl.inputs.size(); ++i)
        v[nl.inputs[i].net] = in.values[i] & Netlist::width_mask(nl.inputs[i].width);
    for (size_t i = 0; i < nl.registers.size(); ++i) v[nl.registers[i].out_net] = s.regs[i];
    for (size_t i = 0; i < nl.read_ports.size(); ++i) v[nl.read_ports[i].out_net] = s.rdata[i];

    for (int ci : nl.topo_cells) {
        const Cell& c = nl.cells[ci];
        uint64_t mask = nl.net_mask(c.output);
        uint64_t r = 0;
        switch (c.kind) {
            case CellKind::Not: r = ~v[c.inputs[0]]; break;
            case CellKind::And: r = v[c.inputs[0]] & v[c.inputs[1]]; break;
            case CellKind::Or: r = v[c.inputs[0]] | v[c.inputs[1]]; break;
            case CellKind::Xor: r = v[c.inputs[0]] ^ v[c.inputs[1]]; break;
            case CellKind::Mux: r = v[c.inputs[0]] ? v[c.inputs[1]] : v[c.inputs[2]]; break;
            case CellKind::Eq: r = v[c.inputs[0]] == v[c.inputs[1]] ? 1 : 0; break;
            case CellKind::Add: r = v[c.inputs[0]] + v[c.inputs[1]]; break;
            case CellKind::Sub: r = v[c.inputs[0]] - v[c.inputs[1]]; break;
            case CellKind::Shift: {
                uint64_t amt = v[c.inputs[1]];
                r = amt >= 64 ? 0 : v[c.inputs[0]] << amt;
                break;
            }
            case CellKind::Const: r = c.value; break;
            case CellKind::Slice: r = v[c.inputs[0]] >> c.lo; break;
            case CellKind::Concat: {
                for (int inn : c.inputs) {
                    r <<= nl.nets[inn].width;
                    r |= v[inn];
                }
                break;
            }
        }
        v[c.output] = r & mask;
    }
}

MachineState step(const Netlist& nl, const MachineState& s, const InputValuation& in) {
    std::vector<uint64_t> v;
    eval_nets(nl, s, in, v);

    MachineState next = s;
    for (size_t i = 0; i < nl.registers.size(); ++i) {
        const Register& r = nl.registers[i];
        if (r.next_net < 0) continue;
        if (r.when_net >= 0 && v[r.when_net] == 0) continue;
        next.regs[i] = v[r.next_net] & Netlist::width_mask(r.width);
    }
    // Synchronous read: latch old contents addressed this cycle.
    for (size_t i = 0; i < nl.read_ports.size(); ++i) {
        const ReadPort& p = nl.read_ports[i];
        uint64_t addr = v[p.addr_net] % static_cast<uint64_t>(nl.memories[p.mem].depth);
        next.rdata[i] = s.mems[p.mem][addr];
    }
    std::vector<int> writes(nl.memories.size(), 0);
    for (const WritePort& p : nl.write_ports) {
        if (v[p.en_net] == 0) continue;
        if (++writes[p.mem] > 1)
            throw WidthMismatch("two write ports fired on memory " + nl.memories[p.mem].name);
        uint64_t addr = v[p.addr_net] % static_cast<uint64_t>(nl.memories[p.mem].depth);
        next.mems[p.mem][addr] = v[p.data_net] & Netlist::width_mask(nl.memories[p.mem].width);
    }
    return next;
}

uint64_t net_value(const Netlist& nl, const MachineState& s, const InputValuation& in,
                   const std::string& net) {
    std::vector<uint64_t> v;
    eval_nets(nl, s, in, v);
    return v[nl.net_id_checked(net)];
}

namespace {

InputValuation idle_inputs(const Netlist& nl) {
    InputValuation in;
    in.values.assign(nl.inputs.size(), 0);
    return in;
}

}  // namespace

Trace run_program_with(const Netlist& nl, const std::vector<InstructionEncoding>& isa, const Program& p,
                       const MachineState& init, int horizon, const Stepper& stepper) {
    if (horizon < 1) throw HorizonZero();
    int in_instr = nl.input_id("instr");
    int in_valid = nl.input_id("ivalid");
    int rdy_net = nl.net_id("fetch_rdy");
    int impc = nl.register_id(nl.annotations.im_pc);
    if (in_instr < 0 || in_valid < 0 || rdy_net < 0 || impc < 0)
        throw SimError("design does not implement the fetch protocol");

    auto enc_of = [&](const ProgramInstr& pi) -> uint64_t {
        for (const auto& e : isa)
            if (e.mnemonic == pi.mnemonic) return e.encode(pi.fields);
        throw SimError("program uses unknown mnemonic " + pi.mnemonic);
    };

    Trace t;
    t.initial = init;
    t.states.push_back(init);
    std::vector<uint64_t> scratch;
    std::set<uint64_t> seen_pcs;
    size_t idx = 0;
    Program prog = p;
    for (int cyc = 0; cyc < horizon; ++cyc) {
        const MachineState& cur = t.states.back();
        InputValuation in = idle_inputs(nl);
        bool have = idx < prog.instrs.size();
        if (have) {
            in.values[in_instr] = enc_of(prog.instrs[idx]);
            in.values[in_valid] = 1;
        }
        eval_nets(nl, cur, in, scratch);
        if (have && scratch[rdy_net]) {
            uint64_t pc = cur.regs[impc];
            if (!seen_pcs.insert(pc).second)
                throw NonUniquePc("pc " + std::to_string(pc) + " assigned twice");
            prog.instrs[idx].pc = static_cast<int>(pc);
            ++idx;
        }
        t.inputs.push_back(in);
        t.states.push_back(stepper(cur, in));
    }
    return t;
}

Trace run_program(const Netlist& nl, const std::vector<InstructionEncoding>& isa, const Program& p,
                  const MachineState& init, int horizon) {
    return run_program_with(nl, isa, p, init, horizon,
                            [&](const MachineState& s, const InputValuation& in) { return step(nl, s, in); });
}

std::string Trace::dump(const Netlist& nl) const {
    std::ostringstream os;
    for (size_t k = 0; k + 1 < states.size(); ++k) {
        os << "cycle " << k << ":";
        const MachineState& a = states[k];
        const MachineState& b = states[k + 1];
        for (size_t i = 0; i < nl.registers.size(); ++i)
            if (a.regs[i] != b.regs[i]) os << " " << nl.registers[i].name << "=" << b.regs[i];
        for (size_t m = 0; m < nl.memories.size(); ++m)
            for (size_t w = 0; w < a.mems[m].size(); ++w)
                if (a.mems[m][w] != b.mems[m][w])
                    os << " " << nl.memories[m].name << "[" << w << "]=" << b.mems[m][w];
        os << "\n";
    }
    return os.str();
}

}  // namespace upathlab
