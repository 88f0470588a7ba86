#include <cstdlib>
#include <sstream>

#include "upathlab/netlist.hpp"

namespace upathlab {

namespace {

std::vector<std::string> tokens_of(const std::string& stmt) {
    std::vector<std::string> out;
    std::istringstream is(stmt);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

// Splits source text into (line number, statement) pairs; '#' starts a
// comment, ';' separates statements on one line.
std::vector<std::pair<int, std::string>> statements_of(const std::string& text) {
    std::vector<std::pair<int, std::string>> out;
    int lineno = 0;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t start = 0;
        while (start <= line.size()) {
            auto semi = line.find(';', start);
            std::string stmt = line.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
            if (stmt.find_first_not_of(" \t\r") != std::string::npos) out.emplace_back(lineno, stmt);
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
    }
    return out;
}

uint64_t parse_u64(const std::string& s, int line) {
    char* end = nullptr;
    uint64_t v = std::strtoull(s.c_str(), &end, 0);
    if (end == nullptr || *end != '\0') throw SyntaxError(line, "expected integer, got '" + s + "'");
    return v;
}

// "name:width" or plain "name" (width -1).
std::pair<std::string, int> parse_sized_name(const std::string& s, int line) {
    auto colon = s.find(':');
    if (colon == std::string::npos) return {s, -1};
    int w = static_cast<int>(parse_u64(s.substr(colon + 1), line));
    return {s.substr(0, colon), w};
}

struct Builder {
    Netlist nl;
    std::map<std::string, int> net_ids;

    int net(const std::string& name, int width, int line) {
        auto it = net_ids.find(name);
        if (it != net_ids.end()) {
            if (width > 0 && nl.nets[it->second].width > 0 && nl.nets[it->second].width != width)
                throw SyntaxError(line, "conflicting widths for net " + name);
            if (width > 0) nl.nets[it->second].width = width;
            return it->second;
        }
        Net n;
        n.name = name;
        n.width = width;
        nl.nets.push_back(n);
        int id = static_cast<int>(nl.nets.size()) - 1;
        net_ids[name] = id;
        return id;
    }
};

}  // namespace

Netlist parse_netlist(const std::string& text) {
    Builder b;
    std::map<std::string, std::pair<int, int>> pending_next;       // reg -> (next net, when net)
    for (const auto& [line, stmt] : statements_of(text)) {
        auto tok = tokens_of(stmt);
        if (tok.empty()) continue;
        const std::string& kw = tok[0];
        auto need = [&](size_t n) {
            if (tok.size() < n) throw SyntaxError(line, "too few tokens in '" + kw + "' statement");
        };
        if (kw == "design") {
            need(2);
            b.nl.design_name = tok[1];
        } else if (kw == "expect") {
            need(3);
            b.nl.expectations[tok[1]] = static_cast<long>(parse_u64(tok[2], line));
        } else if (kw == "in") {
            need(2);
            auto [name, w] = parse_sized_name(tok[1], line);
            if (w <= 0) throw SyntaxError(line, "input needs a width: " + name);
            Input in;
            in.name = name;
            in.width = w;
            in.net = b.net(name, w, line);
            b.nl.inputs.push_back(in);
        } else if (kw == "out") {
            need(4);
            if (tok[2] != "=") throw SyntaxError(line, "expected '='");
            Output o;
            o.name = tok[1];
            o.net = b.net(tok[3], -1, line);
            b.nl.outputs.push_back(o);
        } else if (kw == "reg") {
            need(4);
            auto [name, w] = parse_sized_name(tok[1], line);
            if (w <= 0) throw SyntaxError(line, "register needs a width: " + name);
            if (tok[2] != "reset") throw SyntaxError(line, "expected 'reset'");
            Register r;
            r.name = name;
            r.width = w;
            r.reset = parse_u64(tok[3], line);
            r.out_net = b.net(name, w, line);
            b.nl.registers.push_back(r);
        } else if (kw == "mem") {
            need(3);
            auto [name, w] = parse_sized_name(tok[1], line);
            if (w <= 0) throw SyntaxError(line, "memory needs a word width: " + name);
            Memory m;
            m.name = name;
            m.width = w;
            m.depth = static_cast<int>(parse_u64(tok[2], line));
            if (m.depth <= 0) throw SyntaxError(line, "memory needs a positive depth");
            b.nl.memories.push_back(m);
        } else if (kw == "read") {
            need(5);
            if (tok[2] != "=") throw SyntaxError(line, "expected '='");
            int mem = b.nl.memory_id(tok[3]);
            if (mem < 0) throw SyntaxError(line, "unknown memory: " + tok[3]);
            ReadPort p;
            p.mem = mem;
            p.out_net = b.net(tok[1], b.nl.memories[mem].width, line);
            p.addr_net = b.net(tok[4], -1, line);
            b.nl.read_ports.push_back(p);
        } else if (kw == "write") {
            need(5);
            int mem = b.nl.memory_id(tok[1]);
            if (mem < 0) throw SyntaxError(line, "unknown memory: " + tok[1]);
            WritePort p;
            p.mem = mem;
            p.addr_net = b.net(tok[2], -1, line);
            p.data_net = b.net(tok[3], -1, line);
            p.en_net = b.net(tok[4], -1, line);
            if (tok.size() > 5) {
                if (tok.size() != 7 || tok[5] != "pc") throw SyntaxError(line, "expected 'pc <net>'");
                p.pc_net = b.net(tok[6], -1, line);
            }
            b.nl.write_ports.push_back(p);
        } else if (kw == "cell") {
            need(5);
            CellKind kind = cell_kind_from_name(tok[1]);
            auto [oname, ow] = parse_sized_name(tok[2], line);
            if (tok[3] != "=") throw SyntaxError(line, "expected '='");
            Cell c;
            c.kind = kind;
            c.output = b.net(oname, ow, line);
            if (kind == CellKind::Const) {
                c.value = parse_u64(tok[4], line);
                if (tok.size() != 5) throw SyntaxError(line, "CONST takes one literal");
            } else if (kind == CellKind::Slice) {
                if (tok.size() != 7) throw SyntaxError(line, "SLICE takes net hi lo");
                c.inputs.push_back(b.net(tok[4], -1, line));
                c.hi = static_cast<int>(parse_u64(tok[5], line));
                c.lo = static_cast<int>(parse_u64(tok[6], line));
            } else {
                for (size_t i = 4; i < tok.size(); ++i) c.inputs.push_back(b.net(tok[i], -1, line));
                size_t arity = kind == CellKind::Not ? 1 : kind == CellKind::Mux ? 3 : 2;
                if (kind == CellKind::Concat ? c.inputs.size() < 2 : c.inputs.size() != arity)
                    throw SyntaxError(line, "wrong operand count for cell");
            }
            b.nl.cells.push_back(c);
        } else if (kw == "next") {
            need(4);
            if (tok[2] != "=") throw SyntaxError(line, "expected '='");
            int next = b.net(tok[3], -1, line);
            int when = -1;
            if (tok.size() > 4) {
                if (tok.size() != 6 || tok[4] != "when") throw SyntaxError(line, "expected 'when <net>'");
                when = b.net(tok[5], -1, line);
            }
            if (pending_next.count(tok[1])) throw SyntaxError(line, "duplicate next for register " + tok[1]);
            pending_next[tok[1]] = {next, when};
        } else if (kw == "annot") {
            need(2);
            auto& a = b.nl.annotations;
            const std::string& what = tok[1];
            if (what == "ifr" || what == "commit" || what == "arf" || what == "amem" || what == "impc") {
                need(3);
                if (what == "ifr") a.ifr = tok[2];
                else if (what == "commit") a.commit = tok[2];
                else if (what == "arf") a.arf = tok[2];
                else if (what == "amem") a.amem = tok[2];
                else a.im_pc = tok[2];
            } else if (what == "operand") {
                need(4);
                if (tok[2] == "a") {
                    if (a.operand_regs.empty()) a.operand_regs.resize(1);
                    a.operand_regs[0] = tok[3];
                } else if (tok[2] == "b") {
                    if (a.operand_regs.size() < 2) a.operand_regs.resize(2);
                    a.operand_regs[1] = tok[3];
                } else {
                    throw SyntaxError(line, "operand slot must be a or b");
                }
            } else if (what == "mufsm") {
                need(6);
                MuFsm f;
                f.id = tok[2];
                if (tok[3] != "pcr") throw SyntaxError(line, "expected 'pcr'");
                f.pcr = tok[4];
                if (tok[5] != "vars") throw SyntaxError(line, "expected 'vars'");
                for (size_t i = 6; i < tok.size(); ++i) f.vars.push_back(tok[i]);
                if (f.vars.empty()) throw SyntaxError(line, "mufsm needs at least one var");
                a.mufsms.push_back(f);
            } else if (what == "idle") {
                need(4);
                bool found = false;
                for (auto& f : a.mufsms)
                    if (f.id == tok[2]) {
                        std::vector<uint64_t> vals;
                        for (size_t i = 3; i < tok.size(); ++i) vals.push_back(parse_u64(tok[i], line));
                        if (vals.size() != f.vars.size()) throw SyntaxError(line, "idle arity mismatch");
                        f.idle_states.insert(vals);
                        found = true;
                    }
                if (!found) throw SyntaxError(line, "idle before mufsm " + tok[2]);
            } else if (what == "state") {
                need(6);
                std::vector<uint64_t> vals;
                size_t i = 3;
                for (; i < tok.size() && tok[i] != "name"; ++i) vals.push_back(parse_u64(tok[i], line));
                if (i + 1 >= tok.size() || tok[i] != "name") throw SyntaxError(line, "expected 'name <id>'");
                a.state_names[{tok[2], vals}] = tok[i + 1];
            } else {
                throw SyntaxError(line, "unknown annotation: " + what);
            }
        } else {
            throw SyntaxError(line, "unknown statement: " + kw);
        }
    }

    for (const auto& [rname, nw] : pending_next) {
        int rid = b.nl.register_id(rname);
        if (rid < 0) throw SyntaxError(0, "next targets unknown register " + rname);
        b.nl.registers[rid].next_net = nw.first;
        b.nl.registers[rid].when_net = nw.second;
    }
    b.nl.finalize();
    return b.nl;
}

std::vector<InstructionEncoding> parse_encodings(const std::string& text) {
    std::vector<InstructionEncoding> out;
    for (const auto& [line, stmt] : statements_of(text)) {
        auto tok = tokens_of(stmt);
        if (tok.empty()) continue;
        InstructionEncoding e;
        if (tok.size() < 2) throw SyntaxError(line, "encoding needs mnemonic and pattern");
        e.mnemonic = tok[0];
        const std::string& pat = tok[1];
        e.width = static_cast<int>(pat.size());
        if (e.width <= 0 || e.width > 64) throw SyntaxError(line, "bad pattern width");
        for (int i = 0; i < e.width; ++i) {
            char c = pat[e.width - 1 - i];  // pattern is written MSB first
            if (c == '0' || c == '1') {
                e.mask |= 1ull << i;
                if (c == '1') e.pattern |= 1ull << i;
            } else if (c != 'x') {
                throw SyntaxError(line, "pattern may contain only 0, 1, x");
            }
        }
        for (size_t i = 2; i < tok.size(); ++i) {
            auto at = tok[i].find('@');
            auto colon = tok[i].find(':', at == std::string::npos ? 0 : at);
            if (at == std::string::npos || colon == std::string::npos)
                throw SyntaxError(line, "field must be name@lo:width");
            InstructionField f;
            f.name = tok[i].substr(0, at);
            f.lo = static_cast<int>(parse_u64(tok[i].substr(at + 1, colon - at - 1), line));
            f.width = static_cast<int>(parse_u64(tok[i].substr(colon + 1), line));
            if (f.lo + f.width > e.width) throw SyntaxError(line, "field exceeds instruction width");
            for (int bit = f.lo; bit < f.lo + f.width; ++bit)
                if (e.mask & (1ull << bit)) throw SyntaxError(line, "field overlaps fixed pattern bits");
            e.fields.push_back(f);
        }
        for (const auto& prev : out)
            if (prev.width == e.width && (prev.mask & e.mask & (prev.pattern ^ e.pattern)) == 0)
                throw SyntaxError(line, "encoding of " + e.mnemonic + " not disjoint from " + prev.mnemonic);
        out.push_back(e);
    }
    return out;
}

}  // namespace upathlab
