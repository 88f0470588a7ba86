#include "upathlab/oracle.hpp"

#include <algorithm>
#include <mutex>

#include "json.hpp"
#include "upathlab/jobs.hpp"
#include "upathlab/upathsynth.hpp"

namespace upathlab {

namespace {

// Direct visit-set computation from the FSM annotations; deliberately does
// not reuse the checker's PL table beyond names.
struct VisitExtractor {
    struct Fsm {
        std::string id;
        int pcr;
        std::vector<int> vars;
        const MuFsm* meta;
    };
    const Netlist* nl;
    std::vector<Fsm> fsms;
    std::vector<int> pcrs;

    explicit VisitExtractor(const Netlist& n) : nl(&n) {
        for (const auto& f : n.annotations.mufsms) {
            Fsm e;
            e.id = f.id;
            e.pcr = n.register_id(f.pcr);
            for (const auto& v : f.vars) e.vars.push_back(n.register_id(v));
            e.meta = &f;
            fsms.push_back(e);
            pcrs.push_back(e.pcr);
        }
    }

    // PL display names visited by pc in this state.
    std::set<std::string> visits(const MachineState& s, uint64_t pc) const {
        std::set<std::string> out;
        for (const auto& f : fsms) {
            if (s.regs[f.pcr] != pc) continue;
            std::vector<uint64_t> v;
            v.reserve(f.vars.size());
            for (int r : f.vars) v.push_back(s.regs[r]);
            if (f.meta->idle_states.count(v)) continue;
            auto it = nl->annotations.state_names.find({f.id, v});
            if (it != nl->annotations.state_names.end()) {
                out.insert(it->second);
            } else {
                std::string name = f.id + "(";
                for (size_t i = 0; i < v.size(); ++i)
                    name += (i ? "," : "") + std::to_string(v[i]);
                out.insert(name + ")");
            }
        }
        return out;
    }

    std::set<std::string> occupied(const MachineState& s) const {
        std::set<std::string> out;
        for (const auto& f : fsms) {
            uint64_t pc = s.regs[f.pcr];
            if (pc == 0) continue;
            auto v = visits(s, pc);
            out.insert(v.begin(), v.end());
        }
        return out;
    }
};

uint32_t set_hash(const std::set<std::string>& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& x : s) h = fnv1a64(x.data(), x.size(), h ^ 0x9e3779b97f4a7c15ull);
    return static_cast<uint32_t>(h ^ (h >> 32));
}

}  // namespace

std::vector<std::vector<std::string>> all_programs(const ProgramSpace& space) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::vector<std::string>> frontier{{}};
    for (int len = 1; len <= space.max_program_len; ++len) {
        std::vector<std::vector<std::string>> next;
        for (const auto& prefix : frontier)
            for (const auto& m : space.alphabet) {
                auto p = prefix;
                p.push_back(m);
                out.push_back(p);
                next.push_back(std::move(p));
            }
        frontier = std::move(next);
    }
    return out;
}

std::vector<std::map<int, uint64_t>> all_sigmas(const ProgramSpace& space) {
    std::vector<std::map<int, uint64_t>> out{{}};
    for (int w : space.varied_words) {
        std::vector<std::map<int, uint64_t>> grown;
        for (const auto& a : out)
            for (uint64_t v : space.operand_domain) {
                auto next = a;
                next[w] = v;
                grown.push_back(std::move(next));
            }
        out = std::move(grown);
    }
    return out;
}

ObservedTrace observe_run(const Netlist& nl, const ProgramSpace& space, const Program& p,
                          const std::map<int, uint64_t>& amem_words, int horizon) {
    ObservedTrace ot;
    MachineState init = initial_state(nl, amem_words);
    ot.trace = run_program(nl, space.isa, p, init, horizon);
    VisitExtractor vx(nl);
    int commit_net = nl.annotations.commit.empty() ? -1 : nl.net_id_checked(nl.annotations.commit);
    std::vector<uint64_t> scratch;
    for (size_t k = 0; k < ot.trace.states.size(); ++k) {
        const MachineState& s = ot.trace.states[k];
        ot.occupied.push_back(set_hash(vx.occupied(s)));
        if (commit_net >= 0 && k < ot.trace.inputs.size()) {
            eval_nets(nl, s, ot.trace.inputs[k], scratch);
            ot.commit.push_back(scratch[commit_net] != 0 ? 1 : 0);
        } else {
            ot.commit.push_back(0);
        }
    }
    return ot;
}

void attribute_violation(const Netlist& nl, const ProgramSpace& space, Violation& v) {
    if (v.divergence_cycle < 0) throw AttributionFailed("violation has no divergence cycle");
    Program prog;
    {
        std::vector<ProgramInstr> instrs;
        for (const auto& m : v.program) {
            ProgramInstr pi;
            pi.mnemonic = m;
            auto it = space.canonical_fields.find(m);
            if (it != space.canonical_fields.end()) pi.fields = it->second;
            instrs.push_back(pi);
        }
        prog.instrs = instrs;
    }
    int horizon = std::max(v.divergence_cycle + 2, 4);
    Trace t = run_program(nl, space.isa, prog, initial_state(nl, v.sigma), horizon);
    Trace t2 = run_program(nl, space.isa, prog, initial_state(nl, v.sigma_prime), horizon);
    VisitExtractor vx(nl);

    // pc of the j-th fetched instruction is 1 + j by the fetch protocol.
    int n = static_cast<int>(v.program.size());
    int k = v.divergence_cycle;
    for (int m = k - 1; m >= 0; --m) {
        for (int j = 0; j < n; ++j) {
            uint64_t pc = 1 + static_cast<uint64_t>(j);
            auto src_a = vx.visits(t.states[m], pc);
            auto src_b = vx.visits(t2.states[m], pc);
            if (src_a.empty() || src_b.empty()) continue;
            std::set<std::string> common;
            std::set_intersection(src_a.begin(), src_a.end(), src_b.begin(), src_b.end(),
                                  std::inserter(common, common.begin()));
            if (common.empty()) continue;
            auto dst_a = vx.visits(t.states[m + 1], pc);
            auto dst_b = vx.visits(t2.states[m + 1], pc);
            if (dst_a == dst_b) continue;
            v.attributed = true;
            v.decision_cycle = m;
            v.delayed_observation = m < k - 1;
            v.transponder = v.program[j];
            v.src = *common.begin();
            v.dst = dst_a;
            v.dst_prime = dst_b;
            return;
        }
    }
    throw AttributionFailed("no same-instruction decision divergence before cycle " +
                            std::to_string(k));
}

std::vector<Violation> check_sc_safe(const Netlist& nl, const ProgramSpace& space,
                                     const OracleOptions& opts) {
    auto programs = all_programs(space);
    auto sigmas = all_sigmas(space);
    size_t variants = 0;
    for (int w : opts.policy_words) {
        (void)w;
        variants += space.operand_domain.size();  // upper bound per sigma
    }
    size_t cases = programs.size() * sigmas.size() * std::max<size_t>(variants, 1);
    if (cases > opts.max_cases)
        throw SpaceTooLarge("oracle space has " + std::to_string(cases) + " cases");

    std::vector<std::vector<Violation>> found(programs.size());
    parallel_for(opts.jobs, static_cast<int>(programs.size()), [&](int pi) {
        const auto& mnemonics = programs[pi];
        Program prog;
        for (const auto& m : mnemonics) {
            ProgramInstr in;
            in.mnemonic = m;
            auto it = space.canonical_fields.find(m);
            if (it != space.canonical_fields.end()) in.fields = it->second;
            prog.instrs.push_back(in);
        }
        for (const auto& sigma : sigmas) {
            ObservedTrace base = observe_run(nl, space, prog, sigma, opts.horizon);
            for (int h : opts.policy_words) {
                uint64_t base_val = sigma.count(h) ? sigma.at(h) : 0;
                for (uint64_t alt : space.operand_domain) {
                    if (alt == base_val) continue;
                    auto sigma2 = sigma;
                    sigma2[h] = alt;
                    ObservedTrace other = observe_run(nl, space, prog, sigma2, opts.horizon);
                    int k = -1;
                    size_t len = std::min(base.occupied.size(), other.occupied.size());
                    for (size_t c = 0; c < len; ++c) {
                        bool same = opts.observer == ObserverId::RC
                                        ? base.commit[c] == other.commit[c]
                                        : base.occupied[c] == other.occupied[c];
                        if (!same) {
                            k = static_cast<int>(c);
                            break;
                        }
                    }
                    if (k < 0) continue;
                    Violation v;
                    v.program = mnemonics;
                    v.policy.high_words = {h};
                    v.sigma = sigma;
                    v.sigma_prime = sigma2;
                    v.divergence_cycle = k;
                    v.observer = opts.observer;
                    if (opts.attribute) attribute_violation(nl, space, v);
                    found[pi].push_back(std::move(v));
                }
            }
        }
    });
    std::vector<Violation> out;
    for (auto& fs : found)
        for (auto& v : fs) out.push_back(std::move(v));
    return out;
}

std::vector<MuPath> oracle_upaths(const Netlist& nl, const ProgramSpace& space,
                                  const std::string& iuv, int horizon) {
    VisitExtractor vx(nl);
    // Shared definition, not a shared result: edges are con-gated in both routes.
    std::map<std::pair<std::string, std::string>, bool> con_cache;
    PlTable pls(nl);
    auto con = [&](const std::string& a, const std::string& b) {
        int ia = pls.index_of_name(a), ib = pls.index_of_name(b);
        auto key = std::make_pair(pls.pl(ia).fsm, pls.pl(ib).fsm);
        auto it = con_cache.find(key);
        if (it == con_cache.end())
            it = con_cache.emplace(key, con_predicate(nl, pls.pl(ia), pls.pl(ib))).first;
        return it->second;
    };

    std::map<std::tuple<std::set<std::string>, std::set<std::string>, std::set<std::string>,
                        std::set<std::pair<std::string, std::string>>>,
             MuPath>
        fold;

    for (const auto& mnemonics : all_programs(space)) {
        bool has_iuv = std::find(mnemonics.begin(), mnemonics.end(), iuv) != mnemonics.end();
        if (!has_iuv) continue;
        Program prog;
        for (const auto& m : mnemonics) {
            ProgramInstr in;
            in.mnemonic = m;
            auto it = space.canonical_fields.find(m);
            if (it != space.canonical_fields.end()) in.fields = it->second;
            prog.instrs.push_back(in);
        }
        for (const auto& sigma : all_sigmas(space)) {
            Trace t = run_program(nl, space.isa, prog, initial_state(nl, sigma), horizon);
            for (size_t j = 0; j < mnemonics.size(); ++j) {
                if (mnemonics[j] != iuv) continue;
                uint64_t pc = 1 + static_cast<uint64_t>(j);
                // Episode extraction: first occupancy through the cycle
                // before the pc disappears from all PLs.
                std::vector<std::set<std::string>> v;
                bool started = false, closed = false;
                for (const auto& s : t.states) {
                    auto m = vx.visits(s, pc);
                    if (!started) {
                        if (m.empty()) continue;
                        started = true;
                    }
                    if (m.empty()) {
                        closed = true;
                        break;
                    }
                    v.push_back(std::move(m));
                }
                if (!started || !closed) continue;  // never fetched or horizon too short

                std::set<std::string> support, consec, nonconsec, gone;
                std::set<std::pair<std::string, std::string>> edges;
                std::map<std::string, std::set<std::set<std::string>>> ns;
                for (size_t c = 0; c < v.size(); ++c) {
                    for (const auto& pl : v[c]) {
                        if (c > 0 && v[c - 1].count(pl)) consec.insert(pl);
                        if (support.count(pl) && !(c > 0 && v[c - 1].count(pl)) && gone.count(pl))
                            nonconsec.insert(pl);
                        support.insert(pl);
                    }
                    if (c > 0)
                        for (const auto& pl : v[c - 1])
                            if (!v[c].count(pl)) gone.insert(pl);
                    if (c + 1 < v.size()) {
                        for (const auto& a : v[c])
                            for (const auto& b : v[c + 1])
                                if (con(a, b)) edges.insert({a, b});
                        for (const auto& a : v[c]) ns[a].insert(v[c + 1]);
                    } else {
                        for (const auto& a : v[c]) ns[a].insert(std::set<std::string>{});
                    }
                }
                auto key = std::make_tuple(support, consec, nonconsec, edges);
                auto it = fold.find(key);
                if (it == fold.end()) {
                    MuPath p;
                    p.instruction = iuv;
                    p.support = support;
                    p.consec_revisit = consec;
                    p.nonconsec_revisit = nonconsec;
                    p.edges = edges;
                    it = fold.emplace(key, std::move(p)).first;
                }
                MuPath& p = it->second;
                if (p.rep_v.empty() || p.rep_v.size() > v.size()) {
                    p.rep_v = v;
                    p.latency = static_cast<int>(v.size()) - 1;
                }
                for (auto& [src, dsts] : ns)
                    for (auto& d : dsts) p.next_sets[src].insert(d);
                for (const auto& pl : support) {
                    int run = 0;
                    for (const auto& step : v) {
                        if (step.count(pl)) {
                            ++run;
                        } else if (run) {
                            p.revisit_counts[pl].insert(run);
                            run = 0;
                        }
                    }
                    if (run) p.revisit_counts[pl].insert(run);
                }
            }
        }
    }
    std::vector<MuPath> out;
    for (auto& [k, p] : fold) out.push_back(std::move(p));
    std::sort(out.begin(), out.end());
    return out;
}

std::string violations_to_json(const std::vector<Violation>& vs, uint64_t env_fingerprint) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vs) {
        nlohmann::json j;
        j["program"] = v.program;
        j["high-words"] = std::vector<int>(v.policy.high_words.begin(), v.policy.high_words.end());
        nlohmann::json sig = nlohmann::json::object(), sig2 = nlohmann::json::object();
        for (const auto& [w, val] : v.sigma) sig[std::to_string(w)] = val;
        for (const auto& [w, val] : v.sigma_prime) sig2[std::to_string(w)] = val;
        j["sigma"] = sig;
        j["sigma-prime"] = sig2;
        j["divergence-cycle"] = v.divergence_cycle;
        j["observer"] = v.observer == ObserverId::RC ? "commit" : "upath";
        j["attributed"] = v.attributed;
        if (v.attributed) {
            j["delayed-observation"] = v.delayed_observation;
            j["decision-cycle"] = v.decision_cycle;
            j["transponder"] = v.transponder;
            j["src"] = v.src;
            j["dst"] = std::vector<std::string>(v.dst.begin(), v.dst.end());
            j["dst-prime"] = std::vector<std::string>(v.dst_prime.begin(), v.dst_prime.end());
        }
        arr.push_back(j);
    }
    nlohmann::json root;
    root["schema_version"] = 1;
    root["env-fingerprint"] = env_fingerprint;
    root["violations"] = arr;
    return root.dump(2);
}

}  // namespace upathlab
