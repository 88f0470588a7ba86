#include "upathlab/ift.hpp"

#include <functional>

namespace upathlab {

namespace {

// Incremental construction over a netlist copy. finalize() re-derives
// drivers, widths, and the evaluation order afterwards.
struct Builder {
    Netlist& nl;
    int counter = 0;
    std::map<std::string, int> ids;
    std::map<std::pair<int, uint64_t>, int> consts;  // (width, value) -> net

    explicit Builder(Netlist& n) : nl(n) {
        for (size_t i = 0; i < nl.nets.size(); ++i) ids[nl.nets[i].name] = static_cast<int>(i);
    }

    int net(const std::string& name, int width) {
        auto it = ids.find(name);
        if (it != ids.end()) return it->second;
        Net n;
        n.name = name;
        n.width = width;
        nl.nets.push_back(n);
        int id = static_cast<int>(nl.nets.size()) - 1;
        ids[name] = id;
        return id;
    }

    std::string fresh(const std::string& prefix) { return prefix + ".g" + std::to_string(counter++); }

    int cell(CellKind kind, const std::string& name, int width, std::vector<int> inputs,
             uint64_t value = 0, int hi = 0, int lo = 0) {
        Cell c;
        c.kind = kind;
        c.inputs = std::move(inputs);
        c.output = net(name, width);
        c.value = value;
        c.hi = hi;
        c.lo = lo;
        nl.cells.push_back(c);
        return c.output;
    }

    int cconst(int width, uint64_t value) {
        auto key = std::make_pair(width, value);
        auto it = consts.find(key);
        if (it != consts.end()) return it->second;
        int id = cell(CellKind::Const, fresh("tc"), width, {}, value);
        consts[key] = id;
        return id;
    }

    int width(int n) const { return nl.nets[n].width; }

    int mk(CellKind k, std::vector<int> in, int w) { return cell(k, fresh("tn"), w, std::move(in)); }

    int band(int a, int b) { return mk(CellKind::And, {a, b}, width(a)); }
    int bor(int a, int b) { return mk(CellKind::Or, {a, b}, width(a)); }
    int bnot(int a) { return mk(CellKind::Not, {a}, width(a)); }
    int bxor(int a, int b) { return mk(CellKind::Xor, {a, b}, width(a)); }
    int bmux(int s, int a, int b) { return mk(CellKind::Mux, {s, a, b}, width(a)); }
    int beq(int a, int b) { return mk(CellKind::Eq, {a, b}, 1); }

    // OR-reduction to one bit.
    int any(int a) { return bnot(beq(a, cconst(width(a), 0))); }
    // 1-bit to full-width fan-out.
    int bcast(int bit, int w) { return bmux(bit, cconst(w, ~0ull & Netlist::width_mask(w)), cconst(w, 0)); }
    // Unsigned less-than via the borrow bit of a widened subtraction.
    int blt(int a, int b) {
        int w = width(a);
        int za = mk(CellKind::Concat, {cconst(1, 0), a}, w + 1);
        int zb = mk(CellKind::Concat, {cconst(1, 0), b}, w + 1);
        int d = mk(CellKind::Sub, {za, zb}, w + 1);
        return cell(CellKind::Slice, fresh("tn"), 1, {d}, 0, w, w);
    }
};

struct PlaneBuilder {
    Builder& b;
    const Netlist& base;  // the original netlist (cell/net indices still valid)
    std::string prefix;   // "t0" or "t1"
    std::map<int, int> reg_taint;   // base reg -> taint reg index
    std::map<int, int> mem_taint;   // base mem -> taint mem index
    std::map<int, int> read_final;  // base read port -> final taint net
    std::map<int, int> memo;        // base net -> taint net

    int taint_of(int net) {
        auto it = memo.find(net);
        if (it != memo.end()) return it->second;
        int out = build(net);
        memo[net] = out;
        return out;
    }

    int build(int net) {
        const Net& n = base.nets[net];
        int w = n.width;
        switch (n.driver) {
            case DriverKind::Input: return b.cconst(w, 0);
            case DriverKind::Register: return b.nl.registers[reg_taint.at(n.driver_index)].out_net;
            case DriverKind::Read: return read_final.at(n.driver_index);
            case DriverKind::None: return b.cconst(w, 0);
            case DriverKind::Cell: break;
        }
        const Cell& c = base.cells[n.driver_index];
        switch (c.kind) {
            case CellKind::Const: return b.cconst(w, 0);
            case CellKind::Not: return taint_of(c.inputs[0]);
            case CellKind::Slice:
                return b.cell(CellKind::Slice, b.fresh(prefix), w, {taint_of(c.inputs[0])}, 0, c.hi,
                              c.lo);
            case CellKind::Concat: {
                std::vector<int> ins;
                for (int in : c.inputs) ins.push_back(taint_of(in));
                return b.mk(CellKind::Concat, ins, w);
            }
            case CellKind::Xor: return b.bor(taint_of(c.inputs[0]), taint_of(c.inputs[1]));
            case CellKind::And: {
                int ta = taint_of(c.inputs[0]), tb = taint_of(c.inputs[1]);
                int both = b.band(ta, tb);
                int l = b.band(ta, c.inputs[1]);
                int r = b.band(tb, c.inputs[0]);
                return b.bor(b.bor(both, l), r);
            }
            case CellKind::Or: {
                int ta = taint_of(c.inputs[0]), tb = taint_of(c.inputs[1]);
                int both = b.band(ta, tb);
                int l = b.band(ta, b.bnot(c.inputs[1]));
                int r = b.band(tb, b.bnot(c.inputs[0]));
                return b.bor(b.bor(both, l), r);
            }
            case CellKind::Mux: {
                int ts = taint_of(c.inputs[0]);
                int ta = taint_of(c.inputs[1]), tb = taint_of(c.inputs[2]);
                int sel = b.bmux(c.inputs[0], ta, tb);
                int diff = b.bxor(c.inputs[1], c.inputs[2]);
                return b.bor(sel, b.band(b.bcast(ts, w), diff));
            }
            case CellKind::Eq:
                return b.bor(b.any(taint_of(c.inputs[0])), b.any(taint_of(c.inputs[1])));
            case CellKind::Add:
            case CellKind::Sub:
            case CellKind::Shift: {
                int a = b.any(taint_of(c.inputs[0]));
                int t = b.bor(a, b.any(taint_of(c.inputs[1])));
                return b.bcast(t, w);
            }
        }
        return b.cconst(w, 0);
    }
};

// Effective next value of a register as a net (build cells if enabled).
int reg_next_value_net(Builder& b, const Register& r) {
    if (r.next_net < 0) return r.out_net;
    if (r.when_net < 0) return r.next_net;
    return b.bmux(r.when_net, r.next_net, r.out_net);
}

}  // namespace

TaintedNetlist instrument(const Netlist& base, IftMode mode, const std::string& operand_stage_fsm) {
    TaintedNetlist t;
    t.netlist = base;
    t.mode = mode;
    t.operand_stage_fsm = operand_stage_fsm;
    if (t.operand_stage_fsm.empty() && !base.annotations.mufsms.empty())
        t.operand_stage_fsm = base.annotations.mufsms.front().id;

    Netlist& nl = t.netlist;
    Builder b(nl);

    int pc_width = 4;
    if (!base.annotations.im_pc.empty())
        pc_width = base.registers[base.register_id(base.annotations.im_pc)].width;

    auto add_input = [&](const std::string& name, int width) {
        Input in;
        in.name = name;
        in.width = width;
        in.net = b.net(name, width);
        nl.inputs.push_back(in);
        return in.net;
    };
    t.in_tpc = add_input("taint.tpc", pc_width);
    t.in_ppc = add_input("taint.ppc", pc_width);
    t.in_sel_a = add_input("taint.sel_a", 1);
    t.in_sel_b = add_input("taint.sel_b", 1);
    t.in_block = add_input("taint.block", 1);
    t.in_flush = add_input("taint.flush", 1);

    bool two = mode == IftMode::TwoBit;
    size_t base_regs = base.registers.size();
    size_t base_mems = base.memories.size();
    size_t base_reads = base.read_ports.size();

    std::vector<PlaneBuilder> planes;
    planes.push_back({b, base, "t0"});
    if (two) planes.push_back({b, base, "t1"});

    // Shadow state: one taint register per register, one taint memory per
    // memory, per plane. Upper plane first so the lower plane's clearing
    // rule can reference it.
    for (auto& plane : planes) {
        for (size_t i = 0; i < base_regs; ++i) {
            Register tr;
            tr.name = plane.prefix + "." + base.registers[i].name;
            tr.width = base.registers[i].width;
            tr.reset = 0;
            tr.out_net = b.net(tr.name, tr.width);
            nl.registers.push_back(tr);
            plane.reg_taint[static_cast<int>(i)] = static_cast<int>(nl.registers.size()) - 1;
        }
        for (size_t i = 0; i < base_mems; ++i) {
            Memory tm;
            tm.name = plane.prefix + "." + base.memories[i].name;
            tm.width = base.memories[i].width;
            tm.depth = base.memories[i].depth;
            nl.memories.push_back(tm);
            plane.mem_taint[static_cast<int>(i)] = static_cast<int>(nl.memories.size()) - 1;
        }
    }
    // Read ports: raw taint read plus a latched address-taint broadcast.
    // Structure first, taint expressions afterwards: a read address may
    // itself depend on another read port's data.
    std::vector<std::vector<int>> raw_read(planes.size());
    std::vector<std::vector<int>> adt_regs(planes.size());
    for (size_t pi = 0; pi < planes.size(); ++pi) {
        auto& plane = planes[pi];
        for (size_t i = 0; i < base_reads; ++i) {
            const ReadPort& rp = base.read_ports[i];
            ReadPort trp;
            trp.mem = plane.mem_taint.at(rp.mem);
            trp.addr_net = rp.addr_net;
            std::string oname = plane.prefix + ".rd." + base.nets[rp.out_net].name;
            trp.out_net = b.net(oname, base.memories[rp.mem].width);
            nl.read_ports.push_back(trp);

            Register adt;
            adt.name = plane.prefix + ".radt." + base.nets[rp.out_net].name;
            adt.width = 1;
            adt.reset = 0;
            adt.out_net = b.net(adt.name, 1);
            nl.registers.push_back(adt);
            adt_regs[pi].push_back(static_cast<int>(nl.registers.size()) - 1);

            int w = base.memories[rp.mem].width;
            int fin = b.bor(trp.out_net, b.bcast(adt.out_net, w));
            raw_read[pi].push_back(fin);
        }
    }
    // Lower plane read outputs are cleared wherever the upper plane is set.
    for (size_t i = 0; i < base_reads; ++i) {
        int lo = raw_read[0][i];
        if (two) lo = b.band(lo, b.bnot(raw_read[1][i]));
        planes[0].read_final[static_cast<int>(i)] = lo;
        if (two) planes[1].read_final[static_cast<int>(i)] = raw_read[1][i];
    }
    for (size_t pi = 0; pi < planes.size(); ++pi) {
        auto& plane = planes[pi];
        for (size_t i = 0; i < base_reads; ++i)
            nl.registers[adt_regs[pi][i]].next_net =
                plane.b.any(plane.taint_of(base.read_ports[i].addr_net));
    }

    // Introduction triggers follow the operand-stage pcr's next value.
    const MuFsm* stage = nl.fsm(t.operand_stage_fsm);
    int stage_pcr_next = -1;
    if (stage) {
        const Register& pcr = base.registers[base.register_id(stage->pcr)];
        stage_pcr_next = reg_next_value_net(b, pcr);
    }
    int tpc_nz = b.bnot(b.beq(b.net("taint.tpc", pc_width), b.cconst(pc_width, 0)));
    int ppc_nz = b.bnot(b.beq(b.net("taint.ppc", pc_width), b.cconst(pc_width, 0)));
    int at_stage_t = -1, in_window = -1;
    if (stage_pcr_next >= 0) {
        at_stage_t = b.band(b.beq(stage_pcr_next, b.net("taint.tpc", pc_width)), tpc_nz);
        int gt = b.blt(b.net("taint.tpc", pc_width), stage_pcr_next);
        int lt = b.blt(stage_pcr_next, b.net("taint.ppc", pc_width));
        int bounds = b.band(gt, lt);
        in_window = b.band(b.band(bounds, b.band(tpc_nz, ppc_nz)), b.net("taint.flush", 1));
    }

    // Operand registers by slot.
    std::vector<int> op_regs;
    for (const auto& r : base.annotations.operand_regs)
        op_regs.push_back(r.empty() ? -1 : base.register_id(r));

    // Register next functions per plane, upper first.
    std::vector<std::vector<int>> reg_rule(planes.size(),
                                           std::vector<int>(base_regs, -1));
    for (size_t pi = 0; pi < planes.size(); ++pi) {
        auto& plane = planes[pi];
        bool upper = two && pi == 1;
        auto is_op_reg = [&](int i) {
            for (int r : op_regs)
                if (r == i) return true;
            return false;
        };
        for (size_t i = 0; i < base_regs; ++i) {
            const Register& r = base.registers[i];
            if (r.next_net < 0 && !is_op_reg(static_cast<int>(i))) continue;
            int treg_out = nl.registers[plane.reg_taint.at(static_cast<int>(i))].out_net;
            int rule;
            if (r.next_net < 0) {
                rule = treg_out;
            } else if (r.when_net < 0) {
                rule = plane.taint_of(r.next_net);
            } else {
                int base_rule = b.bmux(r.when_net, plane.taint_of(r.next_net), treg_out);
                int ten = plane.taint_of(r.when_net);
                rule = b.bor(base_rule, b.bcast(ten, r.width));
            }
            // Forced introduction at the operand registers.
            for (size_t slot = 0; slot < op_regs.size(); ++slot) {
                if (op_regs[slot] != static_cast<int>(i) || at_stage_t < 0) continue;
                int ones = b.cconst(r.width, Netlist::width_mask(r.width));
                if (!upper) {
                    int sel = slot == 0 ? t.in_sel_a : t.in_sel_b;
                    rule = b.bmux(b.band(at_stage_t, sel), ones, rule);
                } else {
                    rule = b.bmux(in_window, ones, rule);
                }
            }
            reg_rule[pi][i] = rule;
        }
    }
    for (size_t i = 0; i < base_regs; ++i) {
        if (reg_rule[0][i] < 0) continue;
        int lo = reg_rule[0][i];
        if (two && reg_rule[1][i] >= 0) lo = b.band(lo, b.bnot(reg_rule[1][i]));
        nl.registers[planes[0].reg_taint.at(static_cast<int>(i))].next_net = lo;
        if (two && reg_rule[1][i] >= 0)
            nl.registers[planes[1].reg_taint.at(static_cast<int>(i))].next_net = reg_rule[1][i];
    }

    // Write ports: taint follows data plus an address-taint broadcast into
    // the written word; ARF/AMEM ports are blockable for i_T's results.
    int arf = base.annotations.arf.empty() ? -1 : base.memory_id(base.annotations.arf);
    int amem = base.annotations.amem.empty() ? -1 : base.memory_id(base.annotations.amem);
    std::vector<std::vector<int>> wp_rule(planes.size());
    for (size_t pi = 0; pi < planes.size(); ++pi) {
        auto& plane = planes[pi];
        for (const WritePort& wp : base.write_ports) {
            int w = base.memories[wp.mem].width;
            int data = b.bor(plane.taint_of(wp.data_net),
                             b.bcast(b.any(plane.taint_of(wp.addr_net)), w));
            wp_rule[pi].push_back(data);
        }
    }
    for (size_t wi = 0; wi < base.write_ports.size(); ++wi) {
        const WritePort& wp = base.write_ports[wi];
        bool arch = wp.mem == arf || wp.mem == amem;
        int lo_data = wp_rule[0][wi];
        if (two) lo_data = b.band(lo_data, b.bnot(wp_rule[1][wi]));
        int lo_en = wp.en_net;
        if (arch && wp.pc_net >= 0) {
            int is_t = b.band(b.beq(wp.pc_net, b.net("taint.tpc", pc_width)), tpc_nz);
            int blocked = b.band(is_t, b.net("taint.block", 1));
            lo_en = b.band(wp.en_net, b.bnot(blocked));
        }
        WritePort lo;
        lo.mem = planes[0].mem_taint.at(wp.mem);
        lo.addr_net = wp.addr_net;
        lo.data_net = lo_data;
        lo.en_net = lo_en;
        nl.write_ports.push_back(lo);
        if (two) {
            WritePort hi;
            hi.mem = planes[1].mem_taint.at(wp.mem);
            hi.addr_net = wp.addr_net;
            hi.data_net = wp_rule[1][wi];
            hi.en_net = wp.en_net;
            nl.write_ports.push_back(hi);
        }
    }

    for (size_t i = 0; i < base_regs; ++i) {
        t.reg_lo[static_cast<int>(i)] = planes[0].reg_taint.at(static_cast<int>(i));
        if (two) t.reg_hi[static_cast<int>(i)] = planes[1].reg_taint.at(static_cast<int>(i));
    }
    for (size_t i = 0; i < base_mems; ++i) {
        t.mem_lo[static_cast<int>(i)] = planes[0].mem_taint.at(static_cast<int>(i));
        if (two) t.mem_hi[static_cast<int>(i)] = planes[1].mem_taint.at(static_cast<int>(i));
    }

    nl.finalize();
    return t;
}

void TaintedNetlist::drive(InputValuation& in, uint64_t t_pc, uint64_t p_pc) const {
    auto set = [&](int input_net, uint64_t v) {
        for (size_t i = 0; i < netlist.inputs.size(); ++i)
            if (netlist.inputs[i].net == input_net) in.values[i] = v;
    };
    set(in_tpc, controls.introduce || controls.block || controls.flush ? t_pc : 0);
    set(in_ppc, p_pc);
    set(in_sel_a, controls.introduce && controls.slot == 0 ? 1 : 0);
    set(in_sel_b, controls.introduce && controls.slot == 1 ? 1 : 0);
    set(in_block, controls.block ? 1 : 0);
    set(in_flush, controls.flush ? 1 : 0);
}

uint64_t TaintedNetlist::reg_taint_lo(const MachineState& s, const std::string& reg) const {
    int base = netlist.register_id(reg);
    auto it = reg_lo.find(base);
    return it == reg_lo.end() ? 0 : s.regs[it->second];
}

uint64_t TaintedNetlist::reg_taint_hi(const MachineState& s, const std::string& reg) const {
    int base = netlist.register_id(reg);
    auto it = reg_hi.find(base);
    return it == reg_hi.end() ? 0 : s.regs[it->second];
}

uint64_t TaintedNetlist::fsm_taint_lo(const MachineState& s, const std::string& fsm_id) const {
    const MuFsm* f = netlist.fsm(fsm_id);
    if (!f) throw UnknownRegister("mufsm " + fsm_id);
    uint64_t acc = 0;
    for (const auto& v : f->vars) acc |= reg_taint_lo(s, v);
    return acc;
}

uint64_t TaintedNetlist::all_fsm_taint_lo(const MachineState& s) const {
    uint64_t acc = 0;
    for (const auto& f : netlist.annotations.mufsms) acc |= fsm_taint_lo(s, f.id);
    return acc;
}

TaintedNetlist introduce_taint(const TaintedNetlist& tnl, const std::string& target) {
    int slot = -1;
    const auto& ops = tnl.netlist.annotations.operand_regs;
    for (size_t i = 0; i < ops.size(); ++i)
        if (ops[i] == target) slot = static_cast<int>(i);
    if (slot < 0) throw NotAnOperandRegister(target);
    TaintedNetlist out = tnl;
    out.controls.introduce = true;
    out.controls.slot = slot;
    return out;
}

TaintedNetlist block_architectural_flow(const TaintedNetlist& tnl) {
    TaintedNetlist out = tnl;
    out.controls.block = true;
    return out;
}

TaintedNetlist flush_dynamic_taint(const TaintedNetlist& tnl) {
    if (tnl.mode != IftMode::TwoBit) throw WrongMode("flush requires two-bit instrumentation");
    TaintedNetlist out = tnl;
    out.controls.flush = true;
    return out;
}

}  // namespace upathlab
