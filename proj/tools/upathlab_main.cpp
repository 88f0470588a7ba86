#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "upathlab/decisions.hpp"
#include "upathlab/designs.hpp"
#include "upathlab/export.hpp"
#include "upathlab/jobs.hpp"
#include "upathlab/leakage.hpp"
#include "upathlab/oracle.hpp"
#include "upathlab/upathsynth.hpp"

using namespace upathlab;

namespace {

struct CommonOpts {
    std::string design;
    std::string isa;
    std::string instr;
    std::vector<uint64_t> operand_domain;
    int bound = 0;
    size_t budget = 0;
    int jobs = default_jobs();
    std::string undetermined = "unreachable";
    std::string ift_mode = "one";
    std::string out = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_design = true) {
    auto* d = cmd->add_option("--design", o.design, "bundled design id or a netlist file path");
    if (need_design) d->required();
    cmd->add_option("--isa", o.isa, "encoding list file (defaults to the bundled toy ISA)");
    cmd->add_option("--instr", o.instr, "instruction mnemonic to analyze (default: all)");
    cmd->add_option("--operand-domain", o.operand_domain, "operand values to enumerate");
    cmd->add_option("--bound", o.bound, "cycle bound");
    cmd->add_option("--budget", o.budget, "state budget per check");
    cmd->add_option("--jobs", o.jobs, "parallel checker jobs (default: cores, UPATHLAB_JOBS)");
    cmd->add_option("--undetermined-as", o.undetermined, "policy: reachable|unreachable")
        ->check(CLI::IsMember({"reachable", "unreachable"}));
    cmd->add_option("--ift-mode", o.ift_mode, "one|two (signature synthesis cases 1-2 vs 3)")
        ->check(CLI::IsMember({"one", "two"}));
    cmd->add_option("--out", o.out, "output directory");
}

DesignInfo setup(const CommonOpts& o, PropertyEnv& env) {
    DesignInfo d = load_design(o.design);
    env = d.default_env;
    if (!o.isa.empty()) {
        std::ifstream f(o.isa);
        if (!f) throw std::runtime_error("cannot open " + o.isa);
        std::ostringstream os;
        os << f.rdbuf();
        env.space.isa = parse_encodings(os.str());
    }
    if (!o.operand_domain.empty()) env.space.operand_domain = o.operand_domain;
    if (o.bound > 0) env.cycle_bound = o.bound;
    if (o.budget > 0) env.state_budget = o.budget;
    env.undetermined = o.undetermined == "reachable" ? UndeterminedPolicy::AsReachable
                                                     : UndeterminedPolicy::AsUnreachable;
    std::filesystem::create_directories(o.out);
    return d;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
    std::cout << "wrote " << path << "\n";
}

std::vector<std::string> instructions_of(const CommonOpts& o, const PropertyEnv& env) {
    if (!o.instr.empty()) return {o.instr};
    return env.space.alphabet;
}

int cmd_synth_upaths(const CommonOpts& o, bool counts) {
    PropertyEnv env;
    DesignInfo d = setup(o, env);
    uint64_t fp = env.fingerprint(d.netlist);
    SynthOptions so;
    so.jobs = o.jobs;
    so.revisit_counts = counts;
    for (const auto& instr : instructions_of(o, env)) {
        SynthResult r = synth_all_upaths(d.netlist, instr, env, so);
        auto ex = extract_decisions(r.upaths);
        write_file(o.out + "/" + d.id + "." + instr + ".upaths.json",
                   upaths_to_json(r.upaths, fp));
        write_file(o.out + "/" + d.id + "." + instr + ".upaths.dot", to_dot(r.upaths, &ex));
        std::cout << d.id << " " << instr << ": " << r.upaths.size() << " upath(s), "
                  << ex.decisions.size() << " decision(s)"
                  << (r.saturated ? "" : " [within budget only]") << "\n";
    }
    return 0;
}

int cmd_synth_signatures(const CommonOpts& o) {
    PropertyEnv env;
    DesignInfo d = setup(o, env);
    uint64_t fp = env.fingerprint(d.netlist);
    std::map<std::string, std::vector<MuPath>> upaths;
    SynthOptions so;
    so.jobs = o.jobs;
    for (const auto& instr : instructions_of(o, env))
        upaths[instr] = synth_all_upaths(d.netlist, instr, env, so).upaths;
    SignatureSynthesis sigs = synth_signatures(d, upaths, env, o.jobs);
    write_file(o.out + "/" + d.id + ".signatures.json", signatures_to_json(sigs.signatures, fp));
    std::ostringstream txt;
    for (const auto& s : sigs.signatures) txt << s.render() << "\n";
    write_file(o.out + "/" + d.id + ".signatures.txt", txt.str());
    std::cout << d.id << ": " << sigs.signatures.size() << " signature(s) from "
              << sigs.classify_queries << " classification queries\n";
    return 0;
}

int cmd_derive_contract(const CommonOpts& o) {
    PropertyEnv env;
    DesignInfo d = setup(o, env);
    uint64_t fp = env.fingerprint(d.netlist);
    std::map<std::string, std::vector<MuPath>> upaths;
    SynthOptions so;
    so.jobs = o.jobs;
    for (const auto& instr : instructions_of(o, env))
        upaths[instr] = synth_all_upaths(d.netlist, instr, env, so).upaths;
    SignatureSynthesis sigs = synth_signatures(d, upaths, env, o.jobs);
    auto views = derive_contracts(sigs.signatures, upaths);
    write_file(o.out + "/" + d.id + ".contracts.json", contracts_to_json(views, fp));
    for (const auto& v : views)
        std::cout << v.contract << " / " << v.component << ": " << v.rows.size() << " row(s)\n";
    return 0;
}

int cmd_check_safety(const CommonOpts& o, const std::string& observer) {
    PropertyEnv env;
    DesignInfo d = setup(o, env);
    uint64_t fp = env.fingerprint(d.netlist);

    OracleOptions oo;
    oo.observer = observer == "commit" ? ObserverId::RC : ObserverId::RUpath;
    oo.jobs = o.jobs;
    oo.horizon = env.cycle_bound;
    int depth = d.netlist.memories[d.netlist.memory_id(d.netlist.annotations.amem)].depth;
    for (int w = 0; w < depth; ++w) oo.policy_words.push_back(w);
    auto violations = check_sc_safe(d.netlist, env.space, oo);
    write_file(o.out + "/" + d.id + ".violations.json", violations_to_json(violations, fp));

    // Cross-check: every attributed (transponder, src) must appear among the
    // synthesized signatures.
    std::map<std::string, std::vector<MuPath>> upaths;
    SynthOptions so;
    so.jobs = o.jobs;
    for (const auto& instr : env.space.alphabet)
        upaths[instr] = synth_all_upaths(d.netlist, instr, env, so).upaths;
    SignatureSynthesis sigs = synth_signatures(d, upaths, env, o.jobs);
    std::set<std::pair<std::string, std::string>> have;
    for (const auto& s : sigs.signatures) have.insert({s.transponder, s.src});
    size_t uncovered = 0;
    for (const auto& v : violations)
        if (v.attributed && !have.count({v.transponder, v.src})) ++uncovered;
    std::cout << d.id << ": " << violations.size() << " violation(s), " << uncovered
              << " uncovered by signatures\n";
    return uncovered == 0 ? 0 : 2;
}

int cmd_render(const std::string& input, const std::string& output) {
    std::ifstream f(input);
    if (!f) throw std::runtime_error("cannot open " + input);
    std::ostringstream os;
    os << f.rdbuf();
    auto upaths = upaths_from_json(os.str());
    auto ex = extract_decisions(upaths);
    write_file(output, to_dot(upaths, &ex));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microarchitectural execution path and leakage signature synthesis"};
    app.require_subcommand(1);

    CommonOpts o_up, o_sig, o_con, o_chk;
    bool counts = false;
    auto* up = app.add_subcommand("synth-upaths", "synthesize all upaths per instruction");
    add_common(up, o_up);
    up->add_flag("--revisit-counts", counts, "also derive revisit cycle counts");

    auto* sg = app.add_subcommand("synth-signatures", "synthesize leakage signatures");
    add_common(sg, o_sig);

    auto* co = app.add_subcommand("derive-contract", "project signatures onto leakage contracts");
    add_common(co, o_con);

    std::string observer = "upath";
    auto* ck = app.add_subcommand("check-safety", "two-trace oracle check and signature coverage");
    add_common(ck, o_chk);
    ck->add_option("--observer", observer, "upath|commit")
        ->check(CLI::IsMember({"upath", "commit"}));

    std::string render_in, render_out = "upaths.dot";
    auto* re = app.add_subcommand("render", "render a upaths JSON artifact as DOT");
    re->add_option("--in", render_in, "upaths JSON file")->required();
    re->add_option("--out", render_out, "DOT output path");

    try {
        app.parse(argc, argv);
        if (up->parsed()) return cmd_synth_upaths(o_up, counts);
        if (sg->parsed()) return cmd_synth_signatures(o_sig);
        if (co->parsed()) return cmd_derive_contract(o_con);
        if (ck->parsed()) return cmd_check_safety(o_chk, observer);
        if (re->parsed()) return cmd_render(render_in, render_out);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
