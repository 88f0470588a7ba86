#include "upathlab/upathsynth.hpp"

#include <algorithm>
#include <mutex>

#include "upathlab/jobs.hpp"

namespace upathlab {

namespace {

std::set<std::string> fsm_regs(const Netlist& nl, const std::string& fsm_id) {
    const MuFsm* f = nl.fsm(fsm_id);
    if (!f) throw UnknownRegister("mufsm " + fsm_id);
    std::set<std::string> regs(f->vars.begin(), f->vars.end());
    regs.insert(f->pcr);
    return regs;
}

uint32_t mask_of(const PlTable& pls, const std::set<std::string>& names) {
    uint32_t m = 0;
    for (const auto& n : names) {
        int i = pls.index_of_name(n);
        if (i < 0) throw UnknownRegister("PL " + n);
        m |= 1u << i;
    }
    return m;
}

}  // namespace

bool con_predicate(const Netlist& nl, const PerformingLocation& a, const PerformingLocation& b) {
    return comb_cone(nl, fsm_regs(nl, a.fsm), fsm_regs(nl, b.fsm));
}

std::set<PerformingLocation> enumerate_duv_pls(const Netlist& nl, const PropertyEnv& env,
                                               int jobs) {
    PlTable pls(nl);
    std::vector<char> keep(pls.count(), 0);
    parallel_for(jobs, pls.count(), [&](int i) {
        Property p;
        uint32_t m = 1u << i;
        p.cover = [m](const TraceCtx& ctx) {
            return (ctx.pls->occupied_mask(ctx.cur->regs) & m) != 0;
        };
        keep[i] = check_cover(nl, env, p).decided_reachable(env.undetermined) ? 1 : 0;
    });
    std::set<PerformingLocation> out;
    for (int i = 0; i < pls.count(); ++i)
        if (keep[i]) out.insert(pls.pl(i));
    return out;
}

std::set<PerformingLocation> enumerate_iuv_pls(const Netlist& nl, const std::string& iuv,
                                               const PropertyEnv& env, int jobs) {
    env.space.encoding(iuv);  // throws UnknownInstruction
    PlTable pls(nl);
    auto duv = enumerate_duv_pls(nl, env, jobs);
    std::vector<PerformingLocation> candidates(duv.begin(), duv.end());
    std::vector<char> keep(candidates.size(), 0);
    parallel_for(jobs, static_cast<int>(candidates.size()), [&](int i) {
        Property p;
        p.iuv = iuv;
        uint32_t m = 1u << pls.index_of_name(candidates[i].name);
        p.cover = [m](const TraceCtx& ctx) { return (ctx.cur_mask & m) != 0; };
        keep[i] = check_cover(nl, env, p).decided_reachable(env.undetermined) ? 1 : 0;
    });
    std::set<PerformingLocation> out;
    for (size_t i = 0; i < candidates.size(); ++i)
        if (keep[i]) out.insert(candidates[i]);
    return out;
}

RelationTables build_relations(const Netlist& nl, const std::string& iuv,
                               const std::set<PerformingLocation>& iuv_pls,
                               const PropertyEnv& env, int jobs) {
    PlTable pls(nl);
    std::vector<PerformingLocation> v(iuv_pls.begin(), iuv_pls.end());
    int n = static_cast<int>(v.size());
    RelationTables rel;
    std::mutex mu;

    // Ordered pairs for dominates, unordered for exclusive; diagonal included
    // for dominates (reflexive by construction of the refuting cover).
    std::vector<std::pair<int, int>> dq, eq;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i != j || true) dq.push_back({i, j});
            if (i < j) eq.push_back({i, j});
        }

    parallel_for(jobs, static_cast<int>(dq.size()), [&](int k) {
        auto [i, j] = dq[k];
        uint32_t m0 = 1u << pls.index_of_name(v[i].name);
        uint32_t m1 = 1u << pls.index_of_name(v[j].name);
        Property p;
        p.iuv = iuv;
        p.cover = [m0, m1](const TraceCtx& ctx) {
            return ctx.dematerialized && (ctx.visited & m0) && !(ctx.visited & m1);
        };
        if (!check_cover(nl, env, p).decided_reachable(env.undetermined)) {
            std::lock_guard<std::mutex> lock(mu);
            rel.dominates.insert({v[i].name, v[j].name});
        }
    });
    parallel_for(jobs, static_cast<int>(eq.size()), [&](int k) {
        auto [i, j] = eq[k];
        uint32_t m0 = 1u << pls.index_of_name(v[i].name);
        uint32_t m1 = 1u << pls.index_of_name(v[j].name);
        Property p;
        p.iuv = iuv;
        p.cover = [m0, m1](const TraceCtx& ctx) {
            return (ctx.visited & m0) && (ctx.visited & m1);
        };
        if (!check_cover(nl, env, p).decided_reachable(env.undetermined)) {
            std::lock_guard<std::mutex> lock(mu);
            rel.exclusive.insert({v[i].name, v[j].name});
            rel.exclusive.insert({v[j].name, v[i].name});
        }
    });
    return rel;
}

std::vector<std::set<std::string>> candidate_pl_sets(const std::set<PerformingLocation>& iuv_pls,
                                                     const RelationTables& relations) {
    std::vector<std::string> names;
    for (const auto& pl : iuv_pls) names.push_back(pl.name);
    int n = static_cast<int>(names.size());
    std::vector<std::set<std::string>> out;
    for (uint32_t s = 1; s < (1u << n); ++s) {
        std::set<std::string> set;
        for (int i = 0; i < n; ++i)
            if (s & (1u << i)) set.insert(names[i]);
        bool ok = true;
        for (const auto& pl0 : set) {
            for (const auto& [a, b] : relations.dominates)
                if (a == pl0 && !set.count(b)) {
                    ok = false;
                    break;
                }
            if (!ok) break;
        }
        if (ok)
            for (const auto& [a, b] : relations.exclusive)
                if (set.count(a) && set.count(b)) {
                    ok = false;
                    break;
                }
        if (ok) out.push_back(std::move(set));
    }
    return out;
}

CoverVerdict check_pl_set(const Netlist& nl, const std::string& iuv,
                          const std::set<std::string>& candidate, const PropertyEnv& env) {
    PlTable pls(nl);
    if (candidate.empty()) {
        // The fetch PL is always visited; the empty set can never be exact.
        CoverVerdict v;
        v.verdict = Verdict::Unreachable;
        v.saturated = true;
        return v;
    }
    uint32_t m = mask_of(pls, candidate);
    Property p;
    p.iuv = iuv;
    p.context_mask = m;
    p.cover = [m](const TraceCtx& ctx) { return ctx.dematerialized && ctx.visited == m; };
    return check_cover(nl, env, p);
}

std::map<std::string, RevisitFlags> detect_revisits(const Netlist& nl, const std::string& iuv,
                                                    const std::set<std::string>& reachable_set,
                                                    const PropertyEnv& env) {
    PlTable pls(nl);
    uint32_t ctx_mask = mask_of(pls, reachable_set);
    std::map<std::string, RevisitFlags> out;
    for (const auto& name : reachable_set) {
        uint32_t m = 1u << pls.index_of_name(name);
        RevisitFlags f;
        {
            Property p;
            p.iuv = iuv;
            p.context_mask = ctx_mask;
            p.cover = [m](const TraceCtx& ctx) {
                return (ctx.prev_mask & m) && (ctx.cur_mask & m);
            };
            f.consecutive = check_cover(nl, env, p).decided_reachable(env.undetermined);
        }
        {
            Property p;
            p.iuv = iuv;
            p.context_mask = ctx_mask;
            p.cover = [m](const TraceCtx& ctx) { return (ctx.nonconsec_mask & m) != 0; };
            f.nonconsecutive = check_cover(nl, env, p).decided_reachable(env.undetermined);
        }
        out[name] = f;
    }
    return out;
}

namespace {

// Con-gated edges derivable from one adjacency family.
std::set<std::pair<std::string, std::string>> edges_from_adj(
    const PlTable& pls, const std::vector<std::vector<char>>& con,
    const std::vector<uint64_t>& adj) {
    std::set<std::pair<std::string, std::string>> out;
    for (uint64_t pair : adj) {
        uint32_t pm = static_cast<uint32_t>(pair >> 32);
        uint32_t cm = static_cast<uint32_t>(pair & 0xffffffffu);
        if (cm == 0) continue;
        for (int i = 0; i < pls.count(); ++i) {
            if (!(pm & (1u << i))) continue;
            for (int j = 0; j < pls.count(); ++j) {
                if (!(cm & (1u << j))) continue;
                if (con[i][j]) out.insert({pls.pl(i).name, pls.pl(j).name});
            }
        }
    }
    return out;
}

std::vector<std::vector<char>> con_table(const Netlist& nl, const PlTable& pls) {
    std::map<std::pair<std::string, std::string>, bool> fsm_con;
    std::vector<std::vector<char>> con(pls.count(), std::vector<char>(pls.count(), 0));
    for (int i = 0; i < pls.count(); ++i)
        for (int j = 0; j < pls.count(); ++j) {
            auto key = std::make_pair(pls.pl(i).fsm, pls.pl(j).fsm);
            auto it = fsm_con.find(key);
            if (it == fsm_con.end())
                it = fsm_con.emplace(key, con_predicate(nl, pls.pl(i), pls.pl(j))).first;
            con[i][j] = it->second ? 1 : 0;
        }
    return con;
}

}  // namespace

std::set<std::pair<std::string, std::string>> synth_hb_edges(const Netlist& nl,
                                                             const std::string& iuv,
                                                             const std::set<std::string>& reachable_set,
                                                             const PropertyEnv& env) {
    PlTable pls(nl);
    uint32_t set_mask = mask_of(pls, reachable_set);
    auto con = con_table(nl, pls);
    std::set<std::pair<std::string, std::string>> out;
    enumerate_episodes_raw(nl, env, iuv, set_mask, {}, [&](const EpisodeSummary& e) {
        if (e.support != set_mask) return;
        for (const auto& edge : edges_from_adj(pls, con, e.adj)) out.insert(edge);
    });
    return out;
}

std::set<int> revisit_cycle_counts(const Netlist& nl, const std::string& iuv, const MuPath& upath,
                                   const std::string& pl, const PropertyEnv& env) {
    if (!upath.support.count(pl)) throw NotARevisitPl(pl);
    PlTable pls(nl);
    uint32_t set_mask = mask_of(pls, upath.support);
    auto con = con_table(nl, pls);
    uint32_t consec_mask = mask_of(pls, upath.consec_revisit);
    uint32_t noncon_mask = mask_of(pls, upath.nonconsec_revisit);
    uint32_t bit = 1u << pls.index_of_name(pl);
    std::set<int> counts;
    enumerate_episodes_raw(nl, env, iuv, set_mask, {}, [&](const EpisodeSummary& e) {
        if (e.support != set_mask || e.consec != consec_mask || e.nonconsec != noncon_mask) return;
        if (edges_from_adj(pls, con, e.adj) != upath.edges) return;
        int run = 0;
        for (uint32_t m : e.rep_v) {
            if (m & bit) {
                ++run;
            } else if (run) {
                counts.insert(run);
                run = 0;
            }
        }
        if (run) counts.insert(run);
    });
    return counts;
}

SynthResult synth_all_upaths(const Netlist& nl, const std::string& iuv, const PropertyEnv& env,
                             const SynthOptions& options) {
    SynthResult res;
    PlTable pls(nl);
    auto con = con_table(nl, pls);

    res.duv_pls = enumerate_duv_pls(nl, env, options.jobs);
    res.iuv_pls = enumerate_iuv_pls(nl, iuv, env, options.jobs);
    res.relations = build_relations(nl, iuv, res.iuv_pls, env, options.jobs);
    res.candidates = candidate_pl_sets(res.iuv_pls, res.relations);

    std::vector<char> reach(res.candidates.size(), 0);
    std::mutex mu;
    parallel_for(options.jobs, static_cast<int>(res.candidates.size()), [&](int i) {
        CoverVerdict v = check_pl_set(nl, iuv, res.candidates[i], env);
        reach[i] = v.decided_reachable(env.undetermined) ? 1 : 0;
        if (v.verdict == Verdict::Undetermined) {
            std::lock_guard<std::mutex> lock(mu);
            res.any_undetermined = true;
        }
    });
    for (size_t i = 0; i < res.candidates.size(); ++i)
        if (reach[i]) res.reachable_sets.push_back(res.candidates[i]);

    // Split each Reachable PL Set into μpath identities: revisit annotations
    // plus the confirmed HB edge relation, with per-source next-set families
    // accumulated over every execution matching the identity.
    std::vector<std::vector<MuPath>> per_set(res.reachable_sets.size());
    parallel_for(options.jobs, static_cast<int>(res.reachable_sets.size()), [&](int si) {
        const auto& set = res.reachable_sets[si];
        uint32_t set_mask = mask_of(pls, set);
        std::map<std::tuple<uint32_t, uint32_t, std::set<std::pair<std::string, std::string>>>, MuPath>
            group;
        bool sat = enumerate_episodes_raw(nl, env, iuv, set_mask, {}, [&](const EpisodeSummary& e) {
            if (e.support != set_mask) return;
            auto edges = edges_from_adj(pls, con, e.adj);
            auto key = std::make_tuple(e.consec, e.nonconsec, edges);
            auto it = group.find(key);
            if (it == group.end()) {
                MuPath p;
                p.instruction = iuv;
                p.support = set;
                p.consec_revisit = pls.names(e.consec & set_mask);
                p.nonconsec_revisit = pls.names(e.nonconsec & set_mask);
                p.edges = edges;
                it = group.emplace(key, std::move(p)).first;
            }
            MuPath& p = it->second;
            if (p.rep_v.empty() || p.rep_v.size() > e.rep_v.size()) {
                p.rep_v.clear();
                for (uint32_t m : e.rep_v) p.rep_v.push_back(pls.names(m));
                p.latency = static_cast<int>(e.rep_v.size()) - 1;
            }
            // Exact next-step PL sets per source, the dematerialization step
            // contributing the empty set.
            for (uint64_t pair : e.adj) {
                uint32_t pm = static_cast<uint32_t>(pair >> 32);
                uint32_t cm = static_cast<uint32_t>(pair & 0xffffffffu);
                for (const auto& src : pls.names(pm)) p.next_sets[src].insert(pls.names(cm));
            }
        });
        if (!sat) {
            std::lock_guard<std::mutex> lock(mu);
            res.saturated = false;
        }
        for (auto& [k, p] : group) per_set[si].push_back(std::move(p));
    });
    for (auto& group : per_set)
        for (auto& p : group) res.upaths.push_back(std::move(p));
    std::sort(res.upaths.begin(), res.upaths.end());

    if (options.revisit_counts) {
        for (auto& p : res.upaths)
            for (const auto& pl : p.support)
                p.revisit_counts[pl] = revisit_cycle_counts(nl, iuv, p, pl, env);
    }
    return res;
}

}  // namespace upathlab
