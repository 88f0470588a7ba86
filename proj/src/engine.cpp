#include "upathlab/engine.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "upathlab/jobs.hpp"

namespace upathlab {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Reachable: return "reachable";
        case Verdict::Unreachable: return "unreachable";
        case Verdict::Undetermined: return "undetermined";
    }
    return "?";
}

const char* policy_name(UndeterminedPolicy p) {
    return p == UndeterminedPolicy::AsUnreachable ? "as-unreachable" : "as-reachable";
}

// ---------------------------------------------------------------- PlTable

PlTable::PlTable(const Netlist& nl) {
    std::set<int> pcrs;
    for (const auto& f : nl.annotations.mufsms) {
        Slot base;
        base.pcr_reg = nl.register_id(f.pcr);
        pcrs.insert(base.pcr_reg);
        for (const auto& v : f.vars) base.var_regs.push_back(nl.register_id(v));

        // All constant valuations of vars, excluding user-identified idle states.
        std::vector<std::vector<uint64_t>> vals{{}};
        for (const auto& vname : f.vars) {
            const Register& r = nl.registers[nl.register_id(vname)];
            std::vector<std::vector<uint64_t>> grown;
            if (r.width >= 16) throw NetlistError("mufsm var too wide to enumerate: " + vname);
            uint64_t count = 1ull << r.width;
            for (const auto& prefix : vals)
                for (uint64_t x = 0; x < count; ++x) {
                    auto next = prefix;
                    next.push_back(x);
                    grown.push_back(std::move(next));
                }
            vals = std::move(grown);
        }
        for (const auto& v : vals) {
            if (f.idle_states.count(v)) continue;
            PerformingLocation pl;
            pl.fsm = f.id;
            pl.state = v;
            auto it = nl.annotations.state_names.find({f.id, v});
            if (it != nl.annotations.state_names.end()) {
                pl.name = it->second;
            } else {
                std::ostringstream os;
                os << f.id << "(";
                for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
                os << ")";
                pl.name = os.str();
            }
            Slot s = base;
            s.state = v;
            pls_.push_back(pl);
            slots_.push_back(s);
        }
    }
    if (pls_.size() > 32) throw NetlistError("more than 32 candidate PLs");
    all_pcrs_.assign(pcrs.begin(), pcrs.end());
}

int PlTable::index_of_name(const std::string& name) const {
    for (size_t i = 0; i < pls_.size(); ++i)
        if (pls_[i].name == name) return static_cast<int>(i);
    return -1;
}

uint32_t PlTable::visit_mask_pc(const std::vector<uint64_t>& regs, uint64_t pc) const {
    uint32_t m = 0;
    for (size_t i = 0; i < slots_.size(); ++i) {
        const Slot& s = slots_[i];
        if (regs[s.pcr_reg] != pc) continue;
        bool match = true;
        for (size_t k = 0; k < s.var_regs.size(); ++k)
            if (regs[s.var_regs[k]] != s.state[k]) {
                match = false;
                break;
            }
        if (match) m |= 1u << i;
    }
    return m;
}

uint32_t PlTable::occupied_mask(const std::vector<uint64_t>& regs) const {
    uint32_t m = 0;
    for (size_t i = 0; i < slots_.size(); ++i) {
        const Slot& s = slots_[i];
        if (regs[s.pcr_reg] == 0) continue;
        bool match = true;
        for (size_t k = 0; k < s.var_regs.size(); ++k)
            if (regs[s.var_regs[k]] != s.state[k]) {
                match = false;
                break;
            }
        if (match) m |= 1u << i;
    }
    return m;
}

bool PlTable::in_flight(const std::vector<uint64_t>& regs, uint64_t pc) const {
    if (pc == 0) return false;
    for (int r : all_pcrs_)
        if (regs[r] == pc) return true;
    return false;
}

std::set<std::string> PlTable::names(uint32_t mask) const {
    std::set<std::string> out;
    for (int i = 0; i < count(); ++i)
        if (mask & (1u << i)) out.insert(pls_[i].name);
    return out;
}

std::string PlTable::mask_str(uint32_t mask) const {
    std::string out = "{";
    bool first = true;
    for (const auto& n : names(mask)) {
        if (!first) out += ",";
        out += n;
        first = false;
    }
    return out + "}";
}

// ------------------------------------------------------------- env pieces

const InstructionEncoding& ProgramSpace::encoding(const std::string& mnemonic) const {
    for (const auto& e : isa)
        if (e.mnemonic == mnemonic) return e;
    throw UnknownInstruction(mnemonic);
}

uint64_t ProgramSpace::encode(const std::string& mnemonic) const {
    const auto& e = encoding(mnemonic);
    auto it = canonical_fields.find(mnemonic);
    static const std::map<std::string, uint64_t> empty;
    return e.encode(it == canonical_fields.end() ? empty : it->second);
}

void PropertyEnv::validate() const {
    if (space.alphabet.empty() || space.operand_domain.empty())
        throw InvalidEnv("empty input space");
    if (cycle_bound < 1) throw InvalidEnv("zero cycle bound");
    for (const auto& m : space.alphabet) space.encoding(m);  // throws on unknown
}

uint64_t PropertyEnv::fingerprint(const Netlist& nl) const {
    std::ostringstream os;
    os << "alphabet:";
    for (const auto& m : space.alphabet) os << m << ",";
    os << ";domain:";
    for (uint64_t v : space.operand_domain) os << v << ",";
    os << ";words:";
    for (int w : space.varied_words) os << w << ",";
    os << ";len:" << space.max_program_len << ";bound:" << cycle_bound
       << ";policy:" << policy_name(undetermined) << ";design:" << nl.content_hash();
    std::string s = os.str();
    return fnv1a64(s.data(), s.size());
}

MachineState initial_state(const Netlist& nl, const std::map<int, uint64_t>& amem_words) {
    MachineState s = reset_state(nl);
    int amem = nl.annotations.amem.empty() ? -1 : nl.memory_id(nl.annotations.amem);
    int arf = nl.annotations.arf.empty() ? -1 : nl.memory_id(nl.annotations.arf);
    if (amem >= 0) {
        for (const auto& [w, v] : amem_words) {
            if (w < 0 || w >= static_cast<int>(s.mems[amem].size())) continue;
            s.mems[amem][w] = v & Netlist::width_mask(nl.memories[amem].width);
        }
        // Register backing convention: arf[i] preloaded from amem[i].
        if (arf >= 0)
            for (size_t i = 0; i < s.mems[arf].size() && i < s.mems[amem].size(); ++i)
                s.mems[arf][i] = s.mems[amem][i];
    }
    return s;
}

std::vector<MachineState> seed_states(const Netlist& nl, const PropertyEnv& env) {
    std::vector<std::map<int, uint64_t>> assigns{{}};
    if (!nl.annotations.amem.empty()) {
        for (int w : env.space.varied_words) {
            std::vector<std::map<int, uint64_t>> grown;
            for (const auto& a : assigns)
                for (uint64_t v : env.space.operand_domain) {
                    auto next = a;
                    next[w] = v;
                    grown.push_back(std::move(next));
                }
            assigns = std::move(grown);
        }
    }
    std::vector<MachineState> seeds;
    seeds.reserve(assigns.size());
    for (const auto& a : assigns) seeds.push_back(initial_state(nl, a));
    return seeds;
}

Program Witness::to_program(const ProgramSpace& space) const {
    Program p;
    for (const auto& m : program) {
        ProgramInstr pi;
        pi.mnemonic = m;
        auto it = space.canonical_fields.find(m);
        if (it != space.canonical_fields.end()) pi.fields = it->second;
        p.instrs.push_back(pi);
    }
    for (const auto& [w, v] : amem_words) p.amem_init[w] = v;
    return p;
}

Trace replay_witness(const Netlist& nl, const ProgramSpace& space, const Witness& w, int horizon) {
    MachineState init = initial_state(nl, w.amem_words);
    return run_program(nl, space.isa, w.to_program(space), init, horizon);
}

// ------------------------------------------------------------ core search

namespace {

struct Tracker {
    uint64_t iuv_pc = 0;
    uint64_t t_pc = 0;
    int16_t iuv_idx = -1;  // fetch order, 0-based
    int16_t t_idx = -1;
    uint8_t mat = 0, done = 0, t_mat = 0, t_done = 0;
    uint32_t visited = 0, consec = 0, left = 0, nonconsec = 0, prev_mask = 0;
    uint32_t t_first = 0;  // PLs first visited strictly after the T instance dematerialized
    std::vector<uint64_t> adj;  // episode mode: packed (prev<<32)|cur transitions
    std::vector<uint32_t> seq;  // episode mode: concrete visit masks

    void key_into(std::string& k) const {
        auto put = [&](const void* p, size_t n) { k.append(static_cast<const char*>(p), n); };
        put(&iuv_pc, 8);
        put(&t_pc, 8);
        put(&iuv_idx, 2);
        put(&t_idx, 2);
        uint8_t flags = static_cast<uint8_t>(mat | (done << 1) | (t_mat << 2) | (t_done << 3));
        put(&flags, 1);
        put(&visited, 4);
        put(&consec, 4);
        put(&left, 4);
        put(&nonconsec, 4);
        put(&prev_mask, 4);
        put(&t_first, 4);
        if (!adj.empty()) put(adj.data(), adj.size() * 8);
        if (!seq.empty()) put(seq.data(), seq.size() * 4);
    }
};

struct Node {
    MachineState m;
    Tracker tk;
    int parent = -1;
    int16_t choice = -2;  // -2 root, -1 bubble/end, >=0 alphabet index
    uint8_t fetched = 0;
    uint8_t ended = 0;
    uint16_t depth = 0;
};

struct SearchConfig {
    bool episode_mode = false;
    const Property* prop = nullptr;
    std::function<void(const Node&, const Witness&)> on_episode;
};

struct SearchResult {
    bool cover_hit = false;
    Witness witness;
    bool saturated = true;
    size_t states = 0;
};

class Search {
public:
    Search(const Netlist& nl, const PropertyEnv& env, const SearchConfig& cfg)
        : nl_(nl), env_(env), cfg_(cfg), pls_(nl) {
        in_instr_ = nl.input_id("instr");
        in_valid_ = nl.input_id("ivalid");
        rdy_net_ = nl.net_id("fetch_rdy");
        impc_ = nl.annotations.im_pc.empty() ? -1 : nl.register_id(nl.annotations.im_pc);
        has_protocol_ = in_instr_ >= 0 && in_valid_ >= 0 && rdy_net_ >= 0 && impc_ >= 0;
        const Property* p = cfg.prop;
        if (p && p->stepper)
            stepper_ = p->stepper;
        else
            stepper_ = [this](const MachineState& s, const InputValuation& in) {
                return step(nl_, s, in);
            };
        for (const auto& m : env.space.alphabet) encodings_.push_back(env.space.encode(m));
    }

    SearchResult run() {
        SearchResult res;
        auto seeds = seed_states(nl_, env_);
        size_t total = 0;
        for (const auto& seed : seeds)
            if (!run_seed(seed, res, total)) break;  // cover hit or budget exhausted
        res.states = total;
        if (!res.cover_hit) res.saturated = saturated_;
        return res;
    }

private:
    const Netlist& nl_;
    const PropertyEnv& env_;
    const SearchConfig& cfg_;
    PlTable pls_;
    Stepper stepper_;
    std::vector<uint64_t> encodings_;
    int in_instr_ = -1, in_valid_ = -1, rdy_net_ = -1, impc_ = -1;
    bool has_protocol_ = false;
    bool saturated_ = true;

    InputValuation make_inputs(int choice) const {
        InputValuation in;
        in.values.assign(nl_.inputs.size(), 0);
        if (choice >= 0 && has_protocol_) {
            in.values[in_instr_] = encodings_[choice];
            in.values[in_valid_] = 1;
        }
        return in;
    }

    Witness make_witness(const std::vector<Node>& nodes, int idx,
                         const std::map<int, uint64_t>& seed_words) const {
        Witness w;
        w.amem_words = seed_words;
        std::vector<int> chain;
        for (int i = idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
        std::reverse(chain.begin(), chain.end());
        for (int i : chain)
            if (nodes[i].choice >= 0) w.program.push_back(env_.space.alphabet[nodes[i].choice]);
        const Node& last = nodes[idx];
        w.length = last.depth;
        w.iuv_pc = last.tk.iuv_pc;
        w.t_pc = last.tk.t_pc;
        w.p_pc = last.tk.iuv_pc;
        return w;
    }

    // Returns false to stop the whole search.
    bool run_seed(const MachineState& seed, SearchResult& res, size_t& total) {
        const Property* prop = cfg_.prop;
        std::map<int, uint64_t> seed_words;
        if (!nl_.annotations.amem.empty()) {
            int amem = nl_.memory_id(nl_.annotations.amem);
            for (int w : env_.space.varied_words)
                if (w >= 0 && w < static_cast<int>(seed.mems[amem].size()))
                    seed_words[w] = seed.mems[amem][w];
        }

        std::vector<Node> nodes;
        std::unordered_map<std::string, int> seen;
        std::vector<uint64_t> scratch;

        Node root;
        root.m = seed;
        {
            TraceCtx ctx = make_ctx(nullptr, &root, 0);
            if (prop && prop->assume && !prop->assume(ctx)) return true;
            if (prop && prop->cover) {
                ctx.witness = [&]() {
                    std::vector<Node> tmp{root};
                    return make_witness(tmp, 0, seed_words);
                };
                if (prop->cover(ctx)) {
                    res.cover_hit = true;
                    nodes.push_back(root);
                    res.witness = make_witness(nodes, 0, seed_words);
                    return false;
                }
            }
        }
        nodes.push_back(root);
        {
            std::string k;
            node_key(nodes[0], k);
            seen.emplace(std::move(k), 0);
        }
        ++total;

        for (size_t head = 0; head < nodes.size(); ++head) {
            if (total > env_.state_budget) {
                saturated_ = false;
                return true;
            }
            Node cur = nodes[head];  // copy: the vector reallocates during expansion
            if (cur.depth >= static_cast<uint16_t>(env_.cycle_bound)) {
                saturated_ = false;
                continue;
            }
            bool episode_closed = cur.tk.done != 0;
            if (episode_closed && prop && !prop->iuv.empty() && prop->prune_after_episode) continue;

            bool rdy = false;
            if (has_protocol_) {
                eval_nets(nl_, cur.m, make_inputs(-1), scratch);
                rdy = scratch[rdy_net_] != 0;
            }
            bool can_fetch =
                has_protocol_ && rdy && !cur.ended && cur.fetched < env_.space.max_program_len;

            // (alphabet choice, designation bits): 1 = track as the IUV,
            // 2 = designate as the secondary T instance.
            std::vector<std::pair<int, uint8_t>> choices;
            if (can_fetch) {
                choices.push_back({-1, 0});
                for (size_t a = 0; a < env_.space.alphabet.size(); ++a) {
                    const std::string& mn = env_.space.alphabet[a];
                    choices.push_back({static_cast<int>(a), 0});
                    bool can_iuv = prop && prop->iuv == mn && cur.tk.iuv_pc == 0;
                    bool can_t = prop && prop->t_mnemonic == mn && cur.tk.t_pc == 0;
                    if (prop && prop->same_t_p) {
                        if (can_iuv && can_t) choices.push_back({static_cast<int>(a), 3});
                    } else {
                        if (can_iuv) choices.push_back({static_cast<int>(a), 1});
                        if (can_t) choices.push_back({static_cast<int>(a), 2});
                    }
                }
            } else {
                choices.push_back({-1, 0});
            }

            for (auto [choice, desig] : choices) {
                Node next;
                next.parent = static_cast<int>(head);
                next.choice = static_cast<int16_t>(choice);
                next.depth = static_cast<uint16_t>(cur.depth + 1);
                next.fetched = cur.fetched;
                next.ended = cur.ended;
                next.tk = cur.tk;
                uint64_t new_pc = 0;
                if (choice >= 0) {
                    new_pc = cur.m.regs[impc_];
                    next.fetched = static_cast<uint8_t>(cur.fetched + 1);
                } else if (can_fetch) {
                    next.ended = 1;
                }
                if (desig & 1) {
                    next.tk.iuv_pc = new_pc;
                    next.tk.iuv_idx = static_cast<int16_t>(cur.fetched);
                }
                if (desig & 2) {
                    next.tk.t_pc = new_pc;
                    next.tk.t_idx = static_cast<int16_t>(cur.fetched);
                }
                InputValuation in = make_inputs(choice);
                if (prop && prop->drive) prop->drive(in, next.tk.t_pc, next.tk.iuv_pc);
                next.m = stepper_(cur.m, in);
                advance_tracker(next);
                TraceCtx ctx = make_ctx(&cur, &next, next.depth);

                if (prop && prop->context_mask && (ctx.cur_mask & ~prop->context_mask)) continue;
                if (prop && prop->assume && !prop->assume(ctx)) continue;
                if (prop && prop->cover) {
                    ctx.witness = [&]() {
                        Node probe = next;
                        std::vector<Node>& ns = const_cast<std::vector<Node>&>(nodes);
                        ns.push_back(probe);
                        Witness w = make_witness(ns, static_cast<int>(ns.size()) - 1, seed_words);
                        ns.pop_back();
                        return w;
                    };
                    if (prop->cover(ctx)) {
                        res.cover_hit = true;
                        nodes.push_back(std::move(next));
                        res.witness =
                            make_witness(nodes, static_cast<int>(nodes.size()) - 1, seed_words);
                        return false;
                    }
                    ctx.witness = nullptr;
                }
                if (cfg_.episode_mode && !cur.tk.done && next.tk.done && cfg_.on_episode) {
                    nodes.push_back(next);
                    cfg_.on_episode(nodes.back(),
                                    make_witness(nodes, static_cast<int>(nodes.size()) - 1,
                                                 seed_words));
                    nodes.pop_back();
                }

                std::string k;
                node_key(next, k);
                auto [it, inserted] = seen.emplace(std::move(k), static_cast<int>(nodes.size()));
                if (!inserted) continue;
                nodes.push_back(std::move(next));
                ++total;
            }
        }
        return true;
    }

    void node_key(const Node& n, std::string& k) const {
        k = n.m.key();
        n.tk.key_into(k);
        k.push_back(static_cast<char>(n.fetched));
        k.push_back(static_cast<char>(n.ended));
    }

    void advance_tracker(Node& next) const {
        Tracker& tk = next.tk;
        bool t_done_before = tk.t_done != 0;
        if (tk.t_pc != 0 && !tk.t_done) {
            bool fly = pls_.in_flight(next.m.regs, tk.t_pc);
            if (fly) tk.t_mat = 1;
            if (tk.t_mat && !fly) tk.t_done = 1;
        }
        if (tk.iuv_pc == 0 || tk.done) {
            tk.prev_mask = 0;
            return;
        }
        uint32_t cm = pls_.visit_mask_pc(next.m.regs, tk.iuv_pc);
        uint32_t pm = tk.prev_mask;
        if (!tk.mat && cm != 0) tk.mat = 1;
        if (tk.mat) {
            if (t_done_before) tk.t_first |= cm & ~tk.visited;
            tk.visited |= cm;
            tk.consec |= pm & cm;
            tk.nonconsec |= (cm & ~pm) & tk.left;
            tk.left |= pm & ~cm;
            if (cfg_.episode_mode && (pm != 0 || cm != 0)) {
                if (pm != 0) {
                    uint64_t pair = (static_cast<uint64_t>(pm) << 32) | cm;
                    auto it = std::lower_bound(tk.adj.begin(), tk.adj.end(), pair);
                    if (it == tk.adj.end() || *it != pair) tk.adj.insert(it, pair);
                }
                if (cm != 0) tk.seq.push_back(cm);
            }
            if (pm != 0 && cm == 0) tk.done = 1;
        }
        tk.prev_mask = cm;
    }

    TraceCtx make_ctx(const Node* prev, const Node* cur, int cycle) const {
        TraceCtx ctx;
        ctx.nl = &nl_;
        ctx.pls = &pls_;
        ctx.prev = prev ? &prev->m : nullptr;
        ctx.cur = &cur->m;
        ctx.cycle = cycle;
        const Tracker& tk = cur->tk;
        ctx.iuv_pc = tk.iuv_pc;
        ctx.cur_mask = tk.iuv_pc && !tk.done ? pls_.visit_mask_pc(cur->m.regs, tk.iuv_pc) : 0;
        ctx.prev_mask = prev ? prev->tk.prev_mask : 0;
        ctx.visited = tk.visited | ctx.cur_mask;
        ctx.consec_mask = tk.consec;
        ctx.nonconsec_mask = tk.nonconsec;
        ctx.materialized = tk.mat != 0 || ctx.cur_mask != 0;
        ctx.dematerialized = tk.done != 0 && (!prev || prev->tk.done == 0);
        ctx.t_pc = tk.t_pc;
        ctx.p_pc = tk.iuv_pc;
        ctx.t_fetch_idx = tk.t_idx;
        ctx.p_fetch_idx = tk.iuv_idx;
        ctx.t_materialized = tk.t_mat != 0;
        ctx.t_dematerialized = tk.t_done != 0;
        ctx.t_gone_at_first_visit = tk.t_first;
        ctx.fetched = cur->fetched;
        return ctx;
    }
};

}  // namespace

CoverVerdict check_cover(const Netlist& nl, const PropertyEnv& env, const Property& prop) {
    env.validate();
    if (!prop.cover) throw InvalidEnv("cover predicate required");
    SearchConfig cfg;
    cfg.prop = &prop;
    Search s(nl, env, cfg);
    SearchResult r = s.run();
    CoverVerdict v;
    v.states_explored = r.states;
    if (r.cover_hit) {
        v.verdict = Verdict::Reachable;
        v.witness = r.witness;
    } else if (r.saturated) {
        v.verdict = Verdict::Unreachable;
        v.saturated = true;
    } else {
        v.verdict = Verdict::Undetermined;
        v.reason = r.states > env.state_budget ? "budget" : "bound";
    }
    return v;
}

FixpointResult reachable_fixpoint(const Netlist& nl, const PropertyEnv& env) {
    env.validate();
    std::set<std::string> keys;
    Property collect;
    collect.cover = [&](const TraceCtx& ctx) {
        keys.insert(ctx.cur->key());
        return false;
    };
    SearchConfig cfg;
    cfg.prop = &collect;
    Search s(nl, env, cfg);
    SearchResult r = s.run();
    FixpointResult out;
    out.state_keys = std::move(keys);
    out.count = out.state_keys.size();
    out.saturated = r.saturated;
    return out;
}

bool enumerate_episodes_raw(const Netlist& nl, const PropertyEnv& env, const std::string& iuv,
                            uint32_t context_mask, const Stepper& stepper,
                            const std::function<void(const EpisodeSummary&)>& cb) {
    env.validate();
    Property prop;
    prop.iuv = iuv;
    prop.context_mask = context_mask;
    prop.stepper = stepper;
    SearchConfig cfg;
    cfg.prop = &prop;
    cfg.episode_mode = true;
    cfg.on_episode = [&](const Node& node, const Witness& w) {
        EpisodeSummary e;
        e.support = node.tk.visited;
        e.consec = node.tk.consec;
        e.nonconsec = node.tk.nonconsec;
        e.adj = node.tk.adj;
        e.rep_v.assign(node.tk.seq.begin(), node.tk.seq.end());
        e.witness = w;
        cb(e);
    };
    Search s(nl, env, cfg);
    SearchResult r = s.run();
    return r.saturated;
}

EpisodeEnumeration enumerate_episodes(const Netlist& nl, const PropertyEnv& env,
                                      const std::string& iuv, uint32_t context_mask,
                                      const Stepper& stepper) {
    std::map<std::tuple<uint32_t, uint32_t, uint32_t, std::vector<uint64_t>>, EpisodeSummary> dedup;
    size_t n = 0;
    bool sat = enumerate_episodes_raw(nl, env, iuv, context_mask, stepper,
                                      [&](const EpisodeSummary& e) {
                                          ++n;
                                          auto key = std::make_tuple(e.support, e.consec,
                                                                     e.nonconsec, e.adj);
                                          auto it = dedup.find(key);
                                          if (it == dedup.end() ||
                                              it->second.rep_v.size() > e.rep_v.size())
                                              dedup[key] = e;
                                      });
    EpisodeEnumeration out;
    for (auto& [k, e] : dedup) out.episodes.push_back(std::move(e));
    out.saturated = sat;
    out.states_explored = n;
    return out;
}

bool EpisodeSummary::operator<(const EpisodeSummary& o) const {
    return std::tie(support, consec, nonconsec, adj) <
           std::tie(o.support, o.consec, o.nonconsec, o.adj);
}

// -------------------------------------------------------- property batch

namespace {

Property spec_to_property(const PlTable& pls, const PropertySpec& spec) {
    Property p;
    auto bit = [&](const std::string& name) -> uint32_t {
        int i = pls.index_of_name(name);
        if (i < 0) throw InvalidEnv("unknown PL in property " + spec.id + ": " + name);
        return 1u << i;
    };
    if (spec.kind == "duv-pl") {
        uint32_t m = bit(spec.pls.at(0));
        p.cover = [m](const TraceCtx& ctx) {
            return (ctx.pls->occupied_mask(ctx.cur->regs) & m) != 0;
        };
    } else if (spec.kind == "iuv-pl") {
        p.iuv = spec.iuv;
        uint32_t m = bit(spec.pls.at(0));
        p.cover = [m](const TraceCtx& ctx) { return (ctx.cur_mask & m) != 0; };
    } else if (spec.kind == "dominates") {
        // Refuting cover: some execution of the IUV visits pl0 but never pl1.
        p.iuv = spec.iuv;
        uint32_t m0 = bit(spec.pls.at(0)), m1 = bit(spec.pls.at(1));
        p.cover = [m0, m1](const TraceCtx& ctx) {
            return ctx.dematerialized && (ctx.visited & m0) && !(ctx.visited & m1);
        };
    } else if (spec.kind == "exclusive") {
        // Refuting cover: some execution of the IUV visits both.
        p.iuv = spec.iuv;
        uint32_t m0 = bit(spec.pls.at(0)), m1 = bit(spec.pls.at(1));
        p.cover = [m0, m1](const TraceCtx& ctx) {
            return (ctx.visited & m0) && (ctx.visited & m1);
        };
    } else if (spec.kind == "pl-set") {
        p.iuv = spec.iuv;
        uint32_t m = 0;
        for (const auto& n : spec.pls) m |= bit(n);
        p.context_mask = m;  // assume: the IUV never visits PLs outside the candidate set
        p.cover = [m](const TraceCtx& ctx) { return ctx.dematerialized && ctx.visited == m; };
    } else {
        throw InvalidEnv("unknown property kind: " + spec.kind);
    }
    return p;
}

}  // namespace

std::vector<VerdictRecord> run_property_batch(const Netlist& nl, const PropertyEnv& env,
                                              const std::vector<PropertySpec>& batch, int jobs) {
    PlTable pls(nl);
    std::vector<VerdictRecord> out(batch.size());
    uint64_t fp = env.fingerprint(nl);
    parallel_for(jobs, static_cast<int>(batch.size()), [&](int i) {
        Property p = spec_to_property(pls, batch[i]);
        CoverVerdict v = check_cover(nl, env, p);
        VerdictRecord rec;
        rec.id = batch[i].id;
        rec.verdict = v.verdict;
        rec.has_witness = v.witness.has_value();
        rec.env_fingerprint = fp;
        out[i] = rec;
    });
    std::sort(out.begin(), out.end(),
              [](const VerdictRecord& a, const VerdictRecord& b) { return a.id < b.id; });
    return out;
}

std::string property_batch_to_json(const std::vector<PropertySpec>& batch) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : batch) {
        nlohmann::json j;
        j["id"] = s.id;
        j["kind"] = s.kind;
        j["iuv"] = s.iuv;
        j["pls"] = s.pls;
        arr.push_back(j);
    }
    nlohmann::json root;
    root["schema_version"] = 1;
    root["properties"] = arr;
    return root.dump(2);
}

std::vector<PropertySpec> property_batch_from_json(const std::string& text) {
    auto root = nlohmann::json::parse(text);
    std::vector<PropertySpec> out;
    for (const auto& j : root.at("properties")) {
        PropertySpec s;
        s.id = j.at("id").get<std::string>();
        s.kind = j.at("kind").get<std::string>();
        s.iuv = j.value("iuv", "");
        s.pls = j.value("pls", std::vector<std::string>{});
        out.push_back(s);
    }
    return out;
}

std::string verdicts_to_json(const std::vector<VerdictRecord>& verdicts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : verdicts) {
        nlohmann::json j;
        j["id"] = v.id;
        j["verdict"] = verdict_name(v.verdict);
        j["witness-ref"] = v.has_witness ? v.witness_ref : "";
        j["env-fingerprint"] = v.env_fingerprint;
        arr.push_back(j);
    }
    nlohmann::json root;
    root["schema_version"] = 1;
    root["verdicts"] = arr;
    return root.dump(2);
}

}  // namespace upathlab
