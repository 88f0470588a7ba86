#include "upathlab/netlist.hpp"

#include <algorithm>
#include <queue>

namespace upathlab {

const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::Not: return "NOT";
        case CellKind::And: return "AND";
        case CellKind::Or: return "OR";
        case CellKind::Xor: return "XOR";
        case CellKind::Mux: return "MUX";
        case CellKind::Eq: return "EQ";
        case CellKind::Add: return "ADD";
        case CellKind::Sub: return "SUB";
        case CellKind::Shift: return "SHIFT";
        case CellKind::Const: return "CONST";
        case CellKind::Slice: return "SLICE";
        case CellKind::Concat: return "CONCAT";
    }
    return "?";
}

CellKind cell_kind_from_name(const std::string& s) {
    static const std::map<std::string, CellKind> table = {
        {"NOT", CellKind::Not},     {"AND", CellKind::And},   {"OR", CellKind::Or},
        {"XOR", CellKind::Xor},     {"MUX", CellKind::Mux},   {"EQ", CellKind::Eq},
        {"ADD", CellKind::Add},     {"SUB", CellKind::Sub},   {"SHIFT", CellKind::Shift},
        {"CONST", CellKind::Const}, {"SLICE", CellKind::Slice}, {"CONCAT", CellKind::Concat},
    };
    auto it = table.find(s);
    if (it == table.end()) throw NetlistError("unknown cell kind: " + s);
    return it->second;
}

CombinationalCycle::CombinationalCycle(std::vector<std::string> ns)
    : NetlistError([&] {
          std::string msg = "combinational cycle through:";
          for (const auto& n : ns) msg += " " + n;
          return msg;
      }()),
      nets(std::move(ns)) {}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t InstructionEncoding::encode(const std::map<std::string, uint64_t>& field_values) const {
    uint64_t word = pattern & mask;
    for (const auto& f : fields) {
        uint64_t v = 0;
        auto it = field_values.find(f.name);
        if (it != field_values.end()) v = it->second;
        word |= (v & Netlist::width_mask(f.width)) << f.lo;
    }
    return word & Netlist::width_mask(width);
}

const InstructionField* InstructionEncoding::field(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

void Netlist::rebuild_index() const {
    net_index_.clear();
    for (size_t i = 0; i < nets.size(); ++i) net_index_[nets[i].name] = static_cast<int>(i);
}

int Netlist::net_id(const std::string& name) const {
    if (net_index_.size() != nets.size()) rebuild_index();
    auto it = net_index_.find(name);
    return it == net_index_.end() ? -1 : it->second;
}

int Netlist::net_id_checked(const std::string& name) const {
    int id = net_id(name);
    if (id < 0) throw NetlistError("unknown net: " + name);
    return id;
}

int Netlist::register_id(const std::string& name) const {
    for (size_t i = 0; i < registers.size(); ++i)
        if (registers[i].name == name) return static_cast<int>(i);
    return -1;
}

int Netlist::memory_id(const std::string& name) const {
    for (size_t i = 0; i < memories.size(); ++i)
        if (memories[i].name == name) return static_cast<int>(i);
    return -1;
}

int Netlist::input_id(const std::string& name) const {
    for (size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].name == name) return static_cast<int>(i);
    return -1;
}

const MuFsm* Netlist::fsm(const std::string& id) const {
    for (const auto& f : annotations.mufsms)
        if (f.id == id) return &f;
    return nullptr;
}

namespace {

int cell_output_width(const Netlist& nl, const Cell& c, int declared) {
    auto w = [&](int i) { return nl.nets[c.inputs[i]].width; };
    switch (c.kind) {
        case CellKind::Not: return w(0);
        case CellKind::And:
        case CellKind::Or:
        case CellKind::Xor:
        case CellKind::Add:
        case CellKind::Sub:
            if (w(0) != w(1)) throw NetlistError("width mismatch in " + nl.nets[c.output].name);
            return w(0);
        case CellKind::Shift: return w(0);
        case CellKind::Mux:
            if (nl.nets[c.inputs[0]].width != 1) throw NetlistError("MUX select must be 1 bit");
            if (w(1) != w(2)) throw NetlistError("MUX arm width mismatch at " + nl.nets[c.output].name);
            return w(1);
        case CellKind::Eq:
            if (w(0) != w(1)) throw NetlistError("EQ width mismatch at " + nl.nets[c.output].name);
            return 1;
        case CellKind::Const:
            if (declared <= 0) throw NetlistError("CONST needs an explicit output width");
            return declared;
        case CellKind::Slice: {
            if (c.hi < c.lo || c.hi >= w(0)) throw NetlistError("bad SLICE range at " + nl.nets[c.output].name);
            return c.hi - c.lo + 1;
        }
        case CellKind::Concat: {
            int total = 0;
            for (size_t i = 0; i < c.inputs.size(); ++i) total += w(static_cast<int>(i));
            return total;
        }
    }
    return -1;
}

}  // namespace

void Netlist::finalize() {
    rebuild_index();

    for (auto& n : nets) {
        n.driver = DriverKind::None;
        n.driver_index = -1;
    }
    auto claim = [&](int net, DriverKind kind, int idx) {
        if (nets[net].driver != DriverKind::None) throw MultipleDrivers(nets[net].name);
        nets[net].driver = kind;
        nets[net].driver_index = idx;
    };
    for (size_t i = 0; i < inputs.size(); ++i) claim(inputs[i].net, DriverKind::Input, static_cast<int>(i));
    for (size_t i = 0; i < registers.size(); ++i) claim(registers[i].out_net, DriverKind::Register, static_cast<int>(i));
    for (size_t i = 0; i < read_ports.size(); ++i) claim(read_ports[i].out_net, DriverKind::Read, static_cast<int>(i));
    for (size_t i = 0; i < cells.size(); ++i) claim(cells[i].output, DriverKind::Cell, static_cast<int>(i));
    for (const auto& n : nets)
        if (n.driver == DriverKind::None) throw NetlistError("net has no driver: " + n.name);

    // Resolve cell output widths in dependency order; detect combinational cycles.
    topo_cells.clear();
    std::vector<int> state(cells.size(), 0);  // 0 new, 1 visiting, 2 done
    std::vector<std::string> stack_names;
    auto visit = [&](auto&& self, int ci) -> void {
        if (state[ci] == 2) return;
        if (state[ci] == 1) {
            std::vector<std::string> cyc = stack_names;
            cyc.push_back(nets[cells[ci].output].name);
            throw CombinationalCycle(cyc);
        }
        state[ci] = 1;
        stack_names.push_back(nets[cells[ci].output].name);
        for (int in : cells[ci].inputs) {
            if (nets[in].driver == DriverKind::Cell) self(self, nets[in].driver_index);
            if (nets[in].width < 0) throw NetlistError("unresolved width for net " + nets[in].name);
        }
        Cell& c = cells[ci];
        int declared = nets[c.output].width;
        nets[c.output].width = cell_output_width(*this, c, declared);
        if (declared > 0 && declared != nets[c.output].width)
            throw NetlistError("declared width disagrees at " + nets[c.output].name);
        stack_names.pop_back();
        state[ci] = 2;
        topo_cells.push_back(ci);
    };
    for (size_t i = 0; i < cells.size(); ++i) visit(visit, static_cast<int>(i));

    for (const auto& n : nets)
        if (n.width <= 0 || n.width > 64) throw NetlistError("bad width for net " + n.name);

    for (const auto& r : registers) {
        if (r.next_net >= 0 && nets[r.next_net].width != r.width)
            throw NetlistError("next width mismatch for register " + r.name);
        if (r.when_net >= 0 && nets[r.when_net].width != 1)
            throw NetlistError("enable must be 1 bit for register " + r.name);
    }
    for (const auto& p : read_ports)
        if (nets[p.out_net].width != memories[p.mem].width)
            throw NetlistError("read port width mismatch on " + memories[p.mem].name);
    for (const auto& p : write_ports) {
        if (nets[p.data_net].width != memories[p.mem].width)
            throw NetlistError("write port width mismatch on " + memories[p.mem].name);
        if (nets[p.en_net].width != 1) throw NetlistError("write enable must be 1 bit");
    }

    // Annotation targets must exist.
    const auto& a = annotations;
    auto need_reg = [&](const std::string& n) {
        if (!n.empty() && register_id(n) < 0) throw UnknownAnnotationTarget(n);
    };
    auto need_mem = [&](const std::string& n) {
        if (!n.empty() && memory_id(n) < 0) throw UnknownAnnotationTarget(n);
    };
    need_reg(a.ifr);
    need_reg(a.im_pc);
    if (!a.commit.empty() && net_id(a.commit) < 0) throw UnknownAnnotationTarget(a.commit);
    need_mem(a.arf);
    need_mem(a.amem);
    for (const auto& r : a.operand_regs) need_reg(r);
    for (const auto& f : a.mufsms) {
        need_reg(f.pcr);
        if (f.vars.empty()) throw NetlistError("mufsm " + f.id + " has no vars");
        if (f.idle_states.empty()) throw NetlistError("mufsm " + f.id + " has no idle states");
        for (const auto& v : f.vars) {
            need_reg(v);
            if (v == f.pcr) throw NetlistError("mufsm " + f.id + ": pcr listed among vars");
        }
        for (const auto& st : f.idle_states)
            if (st.size() != f.vars.size()) throw NetlistError("mufsm " + f.id + ": idle arity mismatch");
    }
}

uint64_t Netlist::content_hash() const {
    std::string text = print_netlist(*this);
    return fnv1a64(text.data(), text.size());
}

bool comb_cone(const Netlist& nl, const std::set<std::string>& from, const std::set<std::string>& to) {
    std::set<int> target_nets;  // nets feeding next-state inputs of `to`
    for (const auto& name : to) {
        int rid = nl.register_id(name);
        if (rid < 0) throw UnknownRegister(name);
        const auto& r = nl.registers[rid];
        if (r.next_net >= 0) target_nets.insert(r.next_net);
        if (r.when_net >= 0) target_nets.insert(r.when_net);
    }

    std::queue<int> work;
    std::set<int> seen;
    for (const auto& name : from) {
        int rid = nl.register_id(name);
        if (rid < 0) throw UnknownRegister(name);
        int net = nl.registers[rid].out_net;
        if (seen.insert(net).second) work.push(net);
    }
    while (!work.empty()) {
        int net = work.front();
        work.pop();
        if (target_nets.count(net)) return true;
        // Fan out through combinational cells only.
        for (size_t ci = 0; ci < nl.cells.size(); ++ci) {
            const Cell& c = nl.cells[ci];
            bool uses = std::find(c.inputs.begin(), c.inputs.end(), net) != c.inputs.end();
            if (uses && seen.insert(c.output).second) work.push(c.output);
        }
    }
    return false;
}

}  // namespace upathlab
