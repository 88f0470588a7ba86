#include "upathlab/leakage.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "upathlab/jobs.hpp"

namespace upathlab {

const char* transmitter_type_name(TransmitterType t) {
    switch (t) {
        case TransmitterType::N: return "N";
        case TransmitterType::DO: return "D_O";
        case TransmitterType::DY: return "D_Y";
        case TransmitterType::S: return "S";
    }
    return "?";
}

TransmitterType type_of_case(ClassifyCase c) {
    switch (c) {
        case ClassifyCase::Intrinsic: return TransmitterType::N;
        case ClassifyCase::DynamicOlder: return TransmitterType::DO;
        case ClassifyCase::DynamicYounger: return TransmitterType::DY;
        case ClassifyCase::Static: return TransmitterType::S;
    }
    return TransmitterType::N;
}

std::string LeakageSignature::render() const {
    std::ostringstream os;
    os << "dst " << name << "(";
    int i = 0;
    for (const auto& in : inputs) {
        if (i) os << ", ";
        os << in.transmitter << "^" << transmitter_type_name(in.type) << " i" << i;
        ++i;
    }
    os << ")";
    // Unsafe arguments and the output range.
    os << " args{";
    i = 0;
    for (const auto& in : inputs) os << (i++ ? "," : "") << in.transmitter << "." << in.operand;
    os << "} range{";
    i = 0;
    for (const auto& d : range) {
        os << (i++ ? "," : "") << "{";
        int j = 0;
        for (const auto& pl : d) os << (j++ ? "," : "") << pl;
        os << "}";
    }
    os << "}";
    return os.str();
}

const char* channel_kind_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::Static: return "static";
        case ChannelKind::Dynamic: return "dynamic";
        case ChannelKind::Both: return "both";
    }
    return "?";
}

bool classify(const TaintedNetlist& tnl, const DesignInfo& design, const std::string& P,
              const Decision& decision, const std::string& T, const std::string& op,
              ClassifyCase c, const PropertyEnv& env, Witness* witness, bool* undetermined) {
    if (c == ClassifyCase::Static && tnl.mode != IftMode::TwoBit)
        throw IncompatibleCase("case 3 requires two-bit instrumentation");
    if (c == ClassifyCase::Intrinsic && T != P) return false;
    if (decision.dst.empty()) return false;  // no destination μFSM to observe
    int slot = operand_slot(T, op);
    if (slot < 0) return false;  // the transmitter has no such operand

    const Netlist& nl = tnl.netlist;
    TaintedNetlist run = introduce_taint(tnl, nl.annotations.operand_regs.at(slot));
    run = block_architectural_flow(run);
    if (c == ClassifyCase::Static) run = flush_dynamic_taint(run);

    PlTable pls(nl);
    uint32_t src_bit = 1u << pls.index_of_name(decision.src);
    uint32_t dst_mask = 0;
    std::vector<std::string> dst_fsms;
    for (const auto& d : decision.dst) {
        int i = pls.index_of_name(d);
        dst_mask |= 1u << i;
        dst_fsms.push_back(pls.pl(i).fsm);
    }

    // Case-3 flushing constraint: the lower plane of every μFSM is clear when
    // i_P is issued into the operand stage.
    int stage_pcr = -1;
    if (const MuFsm* f = nl.fsm(design.operand_stage_fsm)) stage_pcr = nl.register_id(f->pcr);

    Property prop;
    prop.iuv = P;
    prop.t_mnemonic = T;
    prop.same_t_p = c == ClassifyCase::Intrinsic;
    prop.drive = [&run](InputValuation& in, uint64_t t_pc, uint64_t p_pc) {
        run.drive(in, t_pc, p_pc);
    };
    if (c == ClassifyCase::Static) {
        prop.assume = [&run, stage_pcr](const TraceCtx& ctx) {
            if (stage_pcr < 0 || ctx.p_pc == 0) return true;
            if (ctx.cur->regs[stage_pcr] != ctx.p_pc) return true;
            return run.all_fsm_taint_lo(*ctx.cur) == 0;
        };
    }
    prop.cover = [&, c](const TraceCtx& ctx) {
        if (ctx.iuv_pc == 0 || ctx.t_pc == 0 || !ctx.prev) return false;
        if (!(ctx.prev_mask & src_bit)) return false;
        if (ctx.cur_mask != dst_mask) return false;
        switch (c) {
            case ClassifyCase::Intrinsic:
                break;  // same dynamic instruction by designation
            case ClassifyCase::DynamicOlder:
                if (!(ctx.t_fetch_idx >= 0 && ctx.t_fetch_idx < ctx.p_fetch_idx)) return false;
                if (!ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                break;
            case ClassifyCase::DynamicYounger:
                if (!(ctx.t_fetch_idx > ctx.p_fetch_idx)) return false;
                if (!ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                break;
            case ClassifyCase::Static:
                if (!(ctx.t_fetch_idx >= 0 && ctx.t_fetch_idx < ctx.p_fetch_idx)) return false;
                if (!ctx.t_materialized || !ctx.t_dematerialized) return false;
                if (ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                if (!(ctx.t_gone_at_first_visit & src_bit)) return false;
                break;
        }
        for (const auto& fsm : dst_fsms)
            if (run.fsm_taint_lo(*ctx.cur, fsm) != 0) return true;
        return false;
    };

    CoverVerdict v = check_cover(nl, env, prop);
    if (undetermined && v.verdict == Verdict::Undetermined) *undetermined = true;
    if (v.reachable() && witness && v.witness) *witness = *v.witness;
    return v.decided_reachable(env.undetermined);
}

std::optional<LeakageSignature> assemble_signature(const std::string& P, const std::string& src,
                                                   const std::set<Decision>& decisions_at_src,
                                                   const std::vector<DecisionTag>& tags) {
    std::set<Decision> tagged;
    std::set<SignatureInput> inputs;
    for (const auto& t : tags) {
        if (t.decision.src != src || t.decision.instruction != P) continue;
        tagged.insert(t.decision);
        inputs.insert(t.input);
    }
    if (tagged.size() < 2) return std::nullopt;
    LeakageSignature sig;
    sig.name = P + "_" + src;
    sig.transponder = P;
    sig.src = src;
    for (const auto& d : decisions_at_src) sig.range.insert(d.dst);
    sig.inputs = std::move(inputs);
    sig.tagged_decisions = std::move(tagged);
    return sig;
}

ChannelKind classify_channel(const LeakageSignature& sig) {
    bool has_static = false, has_dynamic = false;
    for (const auto& in : sig.inputs) {
        if (in.type == TransmitterType::S)
            has_static = true;
        else
            has_dynamic = true;
    }
    if (has_static && has_dynamic) return ChannelKind::Both;
    return has_static ? ChannelKind::Static : ChannelKind::Dynamic;
}

// One exploration evaluating the taint cover for every decision of P at once.
std::vector<DecisionTag> classify_batch(const TaintedNetlist& tnl, const DesignInfo& design,
                                        const std::string& P, const std::set<Decision>& decisions,
                                        const std::string& T, const std::string& op, ClassifyCase c,
                                        const PropertyEnv& env, bool* undetermined) {
    std::vector<DecisionTag> out;
    if (c == ClassifyCase::Intrinsic && T != P) return out;
    int slot = operand_slot(T, op);
    if (slot < 0) return out;

    const Netlist& nl = tnl.netlist;
    TaintedNetlist run = introduce_taint(tnl, nl.annotations.operand_regs.at(slot));
    run = block_architectural_flow(run);
    if (c == ClassifyCase::Static) run = flush_dynamic_taint(run);

    PlTable pls(nl);
    struct Probe {
        Decision decision;
        uint32_t src_bit = 0, dst_mask = 0;
        std::vector<std::string> dst_fsms;
        bool tagged = false;
        Witness witness;
    };
    std::vector<Probe> probes;
    for (const auto& d : decisions) {
        if (d.dst.empty()) continue;
        Probe p;
        p.decision = d;
        p.src_bit = 1u << pls.index_of_name(d.src);
        for (const auto& pl : d.dst) {
            int i = pls.index_of_name(pl);
            p.dst_mask |= 1u << i;
            p.dst_fsms.push_back(pls.pl(i).fsm);
        }
        probes.push_back(std::move(p));
    }
    if (probes.empty()) return out;

    int stage_pcr = -1;
    if (const MuFsm* f = nl.fsm(design.operand_stage_fsm)) stage_pcr = nl.register_id(f->pcr);

    size_t remaining = probes.size();
    Property prop;
    prop.iuv = P;
    prop.t_mnemonic = T;
    prop.same_t_p = c == ClassifyCase::Intrinsic;
    prop.drive = [&run](InputValuation& in, uint64_t t_pc, uint64_t p_pc) {
        run.drive(in, t_pc, p_pc);
    };
    if (c == ClassifyCase::Static) {
        prop.assume = [&run, stage_pcr](const TraceCtx& ctx) {
            if (stage_pcr < 0 || ctx.p_pc == 0) return true;
            if (ctx.cur->regs[stage_pcr] != ctx.p_pc) return true;
            return run.all_fsm_taint_lo(*ctx.cur) == 0;
        };
    }
    prop.cover = [&](const TraceCtx& ctx) {
        if (remaining == 0 || ctx.iuv_pc == 0 || ctx.t_pc == 0 || !ctx.prev) return false;
        switch (c) {
            case ClassifyCase::Intrinsic:
                break;
            case ClassifyCase::DynamicOlder:
                if (!(ctx.t_fetch_idx >= 0 && ctx.t_fetch_idx < ctx.p_fetch_idx)) return false;
                if (!ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                break;
            case ClassifyCase::DynamicYounger:
                if (!(ctx.t_fetch_idx > ctx.p_fetch_idx)) return false;
                if (!ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                break;
            case ClassifyCase::Static:
                if (!(ctx.t_fetch_idx >= 0 && ctx.t_fetch_idx < ctx.p_fetch_idx)) return false;
                if (!ctx.t_materialized || !ctx.t_dematerialized) return false;
                if (ctx.pls->in_flight(ctx.prev->regs, ctx.t_pc)) return false;
                break;
        }
        for (auto& p : probes) {
            if (p.tagged || !(ctx.prev_mask & p.src_bit) || ctx.cur_mask != p.dst_mask) continue;
            if (c == ClassifyCase::Static && !(ctx.t_gone_at_first_visit & p.src_bit)) continue;
            bool tainted = false;
            for (const auto& fsm : p.dst_fsms)
                if (run.fsm_taint_lo(*ctx.cur, fsm) != 0) {
                    tainted = true;
                    break;
                }
            if (!tainted) continue;
            p.tagged = true;
            p.witness = ctx.witness ? ctx.witness() : Witness{};
            --remaining;
        }
        return false;  // sweep the whole space
    };
    CoverVerdict v = check_cover(nl, env, prop);
    bool treat_untagged_as_unreachable =
        v.saturated || env.undetermined == UndeterminedPolicy::AsUnreachable;
    if (!v.saturated && undetermined) *undetermined = true;
    (void)treat_untagged_as_unreachable;
    for (auto& p : probes) {
        if (!p.tagged) continue;
        DecisionTag tag;
        tag.decision = p.decision;
        tag.input = {T, type_of_case(c), op};
        tag.witness = p.witness;
        out.push_back(std::move(tag));
    }
    return out;
}

SignatureSynthesis synth_signatures(const DesignInfo& design,
                                    const std::map<std::string, std::vector<MuPath>>& upaths,
                                    const PropertyEnv& env, int jobs) {
    SignatureSynthesis out;

    TaintedNetlist one = instrument(design.netlist, IftMode::OneBit, design.operand_stage_fsm);
    TaintedNetlist two = instrument(design.netlist, IftMode::TwoBit, design.operand_stage_fsm);

    struct Batch {
        std::string P;
        std::string T;
        std::string op;
        ClassifyCase c;
    };
    std::vector<Batch> batches;
    std::map<std::string, DecisionExtraction> extractions;
    for (const auto& [P, paths] : upaths) {
        auto ex = extract_decisions(paths);
        extractions[P] = ex;
        if (ex.decisions.empty()) continue;
        for (const auto& T : env.space.alphabet) {
            for (const auto& op : operand_fields(T)) {
                for (ClassifyCase c : {ClassifyCase::Intrinsic, ClassifyCase::DynamicOlder,
                                       ClassifyCase::DynamicYounger, ClassifyCase::Static}) {
                    if (c == ClassifyCase::Intrinsic && T != P) continue;
                    batches.push_back({P, T, op, c});
                }
            }
        }
    }

    std::vector<std::vector<DecisionTag>> results(batches.size());
    std::vector<char> undet(batches.size(), 0);
    parallel_for(jobs, static_cast<int>(batches.size()), [&](int i) {
        const Batch& q = batches[i];
        const TaintedNetlist& tnl = q.c == ClassifyCase::Static ? two : one;
        bool u = false;
        results[i] = classify_batch(tnl, design, q.P, extractions[q.P].decisions, q.T, q.op, q.c,
                                    env, &u);
        undet[i] = u ? 1 : 0;
    });
    out.classify_queries = batches.size();
    for (size_t i = 0; i < batches.size(); ++i) {
        if (undet[i]) out.any_undetermined = true;
        for (auto& tag : results[i]) out.tags.push_back(std::move(tag));
    }
    std::sort(out.tags.begin(), out.tags.end());

    for (const auto& [P, ex] : extractions) {
        for (const auto& src : ex.sources) {
            std::set<Decision> at_src;
            for (const auto& d : ex.decisions)
                if (d.src == src) at_src.insert(d);
            auto sig = assemble_signature(P, src, at_src, out.tags);
            if (!sig) continue;
            // Implicit-input diagnostics: non-operand registers carrying taint
            // at the tagging moment of some witness.
            for (const auto& t : out.tags) {
                if (t.decision.src != src || t.decision.instruction != P) continue;
                const TaintedNetlist& tnl =
                    t.input.type == TransmitterType::S ? two : one;
                TaintedNetlist run =
                    introduce_taint(tnl, design.netlist.annotations.operand_regs.at(
                                             std::max(0, operand_slot(t.input.transmitter,
                                                                      t.input.operand))));
                run = block_architectural_flow(run);
                if (t.input.type == TransmitterType::S) run = flush_dynamic_taint(run);
                MachineState init = initial_state(run.netlist, t.witness.amem_words);
                Trace tr = run_program_with(
                    run.netlist, env.space.isa, t.witness.to_program(env.space), init,
                    t.witness.length,
                    [&](const MachineState& s, const InputValuation& in) {
                        InputValuation driven = in;
                        run.drive(driven, t.witness.t_pc, t.witness.p_pc);
                        return step(run.netlist, s, driven);
                    });
                const MachineState& fin = tr.states.back();
                std::set<std::string> ops(design.netlist.annotations.operand_regs.begin(),
                                          design.netlist.annotations.operand_regs.end());
                for (size_t r = 0; r < design.netlist.registers.size(); ++r) {
                    const std::string& rn = design.netlist.registers[r].name;
                    if (ops.count(rn)) continue;
                    if (run.reg_taint_lo(fin, rn)) sig->implicit_inputs.insert(rn);
                }
                break;  // one witness suffices for the diagnostic
            }
            out.signatures.push_back(std::move(*sig));
        }
    }
    std::sort(out.signatures.begin(), out.signatures.end(),
              [](const LeakageSignature& a, const LeakageSignature& b) { return a.name < b.name; });
    return out;
}

namespace {

struct ContractRow {
    const char* contract;
    const char* component;
    bool mu, p, src, n, d, s, args;
};

// Leakage contract components mapped onto μpaths and signature fields.
const ContractRow kContractTable[] = {
    {"CT", "constant-time contract", false, false, false, true, true, true, true},
    {"MI6", "contention-based dynamic channels", false, true, true, true, true, false, false},
    {"MI6", "static channels", false, true, true, false, false, true, false},
    {"OISA", "input-dependent arithmetic units", false, false, true, true, false, false, true},
    {"STT/SDO/SPT", "explicit channels", false, true, true, true, false, false, true},
    {"STT/SDO/SPT", "implicit channels", false, true, true, false, true, true, true},
    {"STT/SDO/SPT", "implicit branches", false, true, false, false, true, true, true},
    {"STT/SDO/SPT", "prediction-based channels", false, true, true, false, false, true, true},
    {"STT/SDO/SPT", "resolution-based channels", false, true, true, false, true, false, true},
    {"SDO", "data-oblivious variants", true, false, false, true, false, false, true},
    {"Dolma", "variable-time micro-ops", false, false, false, true, false, false, true},
    {"Dolma", "contention-based dynamic channels", false, true, true, true, true, false, true},
    {"Dolma", "inducive micro-ops", false, true, false, false, true, false, true},
    {"Dolma", "resolvent micro-ops", false, false, false, false, true, false, true},
    {"Dolma", "prediction resolution points", false, true, true, false, true, false, true},
    {"Dolma", "persistent state modifying micro-ops", false, false, false, false, false, true, true},
};

}  // namespace

std::vector<ContractView> derive_contracts(const std::vector<LeakageSignature>& signatures,
                                           const std::map<std::string, std::vector<MuPath>>& upaths) {
    std::vector<ContractView> out;
    for (const auto& row : kContractTable) {
        ContractView view;
        view.contract = row.contract;
        view.component = row.component;
        std::set<std::map<std::string, std::string>> rows;
        for (const auto& sig : signatures) {
            for (const auto& in : sig.inputs) {
                bool relevant = (in.type == TransmitterType::N && row.n) ||
                                ((in.type == TransmitterType::DO || in.type == TransmitterType::DY) &&
                                 row.d) ||
                                (in.type == TransmitterType::S && row.s);
                if (!relevant) continue;
                std::map<std::string, std::string> r;
                r["T"] = in.transmitter;
                r["type"] = transmitter_type_name(in.type);
                if (row.p) r["P"] = sig.transponder;
                if (row.src) r["src"] = sig.src;
                if (row.args) r["arg"] = in.operand;
                if (row.mu) {
                    auto it = upaths.find(sig.transponder);
                    r["upaths"] =
                        it == upaths.end() ? "0" : std::to_string(it->second.size());
                }
                rows.insert(std::move(r));
            }
        }
        view.rows.assign(rows.begin(), rows.end());
        out.push_back(std::move(view));
    }
    return out;
}

std::string signatures_to_json(const std::vector<LeakageSignature>& sigs, uint64_t env_fingerprint) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : sigs) {
        nlohmann::json j;
        j["name"] = s.name;
        j["transponder"] = s.transponder;
        j["src"] = s.src;
        nlohmann::json range = nlohmann::json::array();
        for (const auto& d : s.range) range.push_back(std::vector<std::string>(d.begin(), d.end()));
        j["range"] = range;
        nlohmann::json ins = nlohmann::json::array();
        for (const auto& in : s.inputs) {
            nlohmann::json ji;
            ji["transmitter"] = in.transmitter;
            ji["type"] = transmitter_type_name(in.type);
            ji["operand"] = in.operand;
            ins.push_back(ji);
        }
        j["inputs"] = ins;
        nlohmann::json tagged = nlohmann::json::array();
        for (const auto& d : s.tagged_decisions)
            tagged.push_back(std::vector<std::string>(d.dst.begin(), d.dst.end()));
        j["tagged-destinations"] = tagged;
        j["implicit-inputs"] =
            std::vector<std::string>(s.implicit_inputs.begin(), s.implicit_inputs.end());
        j["channel"] = channel_kind_name(classify_channel(s));
        j["rendered"] = s.render();
        arr.push_back(j);
    }
    nlohmann::json root;
    root["schema_version"] = 1;
    root["env-fingerprint"] = env_fingerprint;
    root["signatures"] = arr;
    return root.dump(2);
}

std::vector<LeakageSignature> signatures_from_json(const std::string& text) {
    auto root = nlohmann::json::parse(text);
    std::vector<LeakageSignature> out;
    for (const auto& j : root.at("signatures")) {
        LeakageSignature s;
        s.name = j.at("name").get<std::string>();
        s.transponder = j.at("transponder").get<std::string>();
        s.src = j.at("src").get<std::string>();
        for (const auto& d : j.at("range"))
            s.range.insert(std::set<std::string>(d.begin(), d.end()));
        for (const auto& ji : j.at("inputs")) {
            SignatureInput in;
            in.transmitter = ji.at("transmitter").get<std::string>();
            std::string ty = ji.at("type").get<std::string>();
            in.type = ty == "N"     ? TransmitterType::N
                      : ty == "D_O" ? TransmitterType::DO
                      : ty == "D_Y" ? TransmitterType::DY
                                     : TransmitterType::S;
            in.operand = ji.at("operand").get<std::string>();
            s.inputs.insert(in);
        }
        for (const auto& r : j.value("implicit-inputs", std::vector<std::string>{}))
            s.implicit_inputs.insert(r);
        out.push_back(std::move(s));
    }
    return out;
}

std::string contracts_to_json(const std::vector<ContractView>& views, uint64_t env_fingerprint) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json j;
        j["contract"] = v.contract;
        j["component"] = v.component;
        j["rows"] = v.rows;
        arr.push_back(j);
    }
    nlohmann::json root;
    root["schema_version"] = 1;
    root["env-fingerprint"] = env_fingerprint;
    root["contracts"] = arr;
    return root.dump(2);
}

}  // namespace upathlab
