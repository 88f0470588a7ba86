#include <sstream>

#include "upathlab/netlist.hpp"

namespace upathlab {

std::string print_netlist(const Netlist& nl) {
    std::ostringstream os;
    auto n = [&](int id) -> const std::string& { return nl.nets[id].name; };

    if (!nl.design_name.empty()) os << "design " << nl.design_name << "\n";
    for (const auto& [k, v] : nl.expectations) os << "expect " << k << " " << v << "\n";
    for (const auto& in : nl.inputs) os << "in " << in.name << ":" << in.width << "\n";
    for (const auto& r : nl.registers)
        os << "reg " << r.name << ":" << r.width << " reset " << r.reset << "\n";
    for (const auto& m : nl.memories) os << "mem " << m.name << ":" << m.width << " " << m.depth << "\n";
    for (const auto& p : nl.read_ports)
        os << "read " << n(p.out_net) << " = " << nl.memories[p.mem].name << " " << n(p.addr_net) << "\n";
    for (const auto& c : nl.cells) {
        os << "cell " << cell_kind_name(c.kind) << " " << n(c.output);
        if (c.kind == CellKind::Const) os << ":" << nl.nets[c.output].width;
        os << " =";
        if (c.kind == CellKind::Const) {
            os << " " << c.value;
        } else if (c.kind == CellKind::Slice) {
            os << " " << n(c.inputs[0]) << " " << c.hi << " " << c.lo;
        } else {
            for (int in : c.inputs) os << " " << n(in);
        }
        os << "\n";
    }
    for (const auto& r : nl.registers) {
        if (r.next_net < 0) continue;
        os << "next " << r.name << " = " << n(r.next_net);
        if (r.when_net >= 0) os << " when " << n(r.when_net);
        os << "\n";
    }
    for (const auto& p : nl.write_ports) {
        os << "write " << nl.memories[p.mem].name << " " << n(p.addr_net) << " " << n(p.data_net) << " "
           << n(p.en_net);
        if (p.pc_net >= 0) os << " pc " << n(p.pc_net);
        os << "\n";
    }
    for (const auto& o : nl.outputs) os << "out " << o.name << " = " << n(o.net) << "\n";

    const auto& a = nl.annotations;
    if (!a.ifr.empty()) os << "annot ifr " << a.ifr << "\n";
    if (!a.commit.empty()) os << "annot commit " << a.commit << "\n";
    if (!a.arf.empty()) os << "annot arf " << a.arf << "\n";
    if (!a.amem.empty()) os << "annot amem " << a.amem << "\n";
    if (!a.im_pc.empty()) os << "annot impc " << a.im_pc << "\n";
    for (size_t i = 0; i < a.operand_regs.size(); ++i)
        if (!a.operand_regs[i].empty())
            os << "annot operand " << (i == 0 ? "a" : "b") << " " << a.operand_regs[i] << "\n";
    for (const auto& f : a.mufsms) {
        os << "annot mufsm " << f.id << " pcr " << f.pcr << " vars";
        for (const auto& v : f.vars) os << " " << v;
        os << "\n";
        for (const auto& st : f.idle_states) {
            os << "annot idle " << f.id;
            for (uint64_t v : st) os << " " << v;
            os << "\n";
        }
    }
    for (const auto& [key, name] : a.state_names) {
        os << "annot state " << key.first;
        for (uint64_t v : key.second) os << " " << v;
        os << " name " << name << "\n";
    }
    return os.str();
}

std::string print_encodings(const std::vector<InstructionEncoding>& encs) {
    std::ostringstream os;
    for (const auto& e : encs) {
        os << e.mnemonic << " ";
        for (int i = e.width - 1; i >= 0; --i) {
            if (e.mask & (1ull << i))
                os << ((e.pattern >> i) & 1);
            else
                os << 'x';
        }
        for (const auto& f : e.fields) os << " " << f.name << "@" << f.lo << ":" << f.width;
        os << "\n";
    }
    return os.str();
}

}  // namespace upathlab
