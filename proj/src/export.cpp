#include "upathlab/export.hpp"

#include <sstream>

#include "json.hpp"

namespace upathlab {

namespace {

std::string node_id(int column, const std::string& pl, int instance) {
    return "p" + std::to_string(column) + "_" + pl + "_" + std::to_string(instance);
}

struct Run {
    std::string pl;
    int first_step, last_step;
    int instance;
};

// Maximal consecutive-visit runs per PL over the representative sequence.
std::vector<Run> runs_of(const MuPath& p) {
    std::vector<Run> out;
    std::map<std::string, int> instances;
    std::map<std::string, int> open;  // pl -> index into out, while run active
    for (size_t c = 0; c < p.rep_v.size(); ++c) {
        for (const auto& pl : p.rep_v[c]) {
            auto it = open.find(pl);
            if (it != open.end() && out[it->second].last_step == static_cast<int>(c) - 1) {
                out[it->second].last_step = static_cast<int>(c);
            } else {
                Run r;
                r.pl = pl;
                r.first_step = r.last_step = static_cast<int>(c);
                r.instance = instances[pl]++;
                open[pl] = static_cast<int>(out.size());
                out.push_back(r);
            }
        }
    }
    return out;
}

}  // namespace

std::string to_dot(const std::vector<MuPath>& upaths, const DecisionExtraction* decisions) {
    std::ostringstream os;
    os << "digraph upaths {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n";
    std::set<std::string> sources;
    std::set<std::string> dests;
    if (decisions) {
        sources = decisions->sources;
        for (const auto& d : decisions->decisions)
            for (const auto& pl : d.dst) dests.insert(pl);
    }
    for (size_t pi = 0; pi < upaths.size(); ++pi) {
        const MuPath& p = upaths[pi];
        os << "  subgraph cluster_" << pi << " {\n";
        os << "    label=\"" << p.instruction << " upath " << pi << " (latency " << p.latency
           << ")\";\n";
        auto runs = runs_of(p);
        auto color = [&](const std::string& pl) -> std::string {
            if (sources.count(pl) && dests.count(pl)) return ", color=orange, fontcolor=blue";
            if (sources.count(pl)) return ", color=orange";
            if (dests.count(pl)) return ", color=blue";
            return "";
        };
        // Nodes: single-step runs are one node; longer runs duplicate as
        // first/last with a dashed summary edge.
        for (const auto& r : runs) {
            int len = r.last_step - r.first_step + 1;
            std::string base = node_id(static_cast<int>(pi), r.pl, r.instance);
            if (len == 1) {
                os << "    " << base << " [label=\"" << r.pl << "\"" << color(r.pl) << "];\n";
            } else {
                os << "    " << base << "_f [label=\"" << r.pl << "(1)\"" << color(r.pl) << "];\n";
                os << "    " << base << "_l [label=\"" << r.pl << "(l)\"" << color(r.pl) << "];\n";
                os << "    " << base << "_f -> " << base << "_l [style=dashed, label=\"l=" << len
                   << "\"];\n";
            }
        }
        // Solid one-cycle HB edges between consecutive steps, attached to the
        // run boundary nodes.
        auto node_at = [&](const std::string& pl, int step, bool leaving) -> std::string {
            for (const auto& r : runs) {
                if (r.pl != pl || step < r.first_step || step > r.last_step) continue;
                std::string base = node_id(static_cast<int>(pi), r.pl, r.instance);
                if (r.last_step == r.first_step) return base;
                return base + (leaving ? "_l" : "_f");
            }
            return "";
        };
        for (size_t c = 0; c + 1 < p.rep_v.size(); ++c) {
            for (const auto& a : p.rep_v[c]) {
                for (const auto& b : p.rep_v[c + 1]) {
                    if (!p.edges.count({a, b})) continue;
                    if (a == b) continue;  // covered by the dashed summary
                    std::string from = node_at(a, static_cast<int>(c), true);
                    std::string to = node_at(b, static_cast<int>(c) + 1, false);
                    // Skip edges internal to a run boundary.
                    if (from.empty() || to.empty() || from == to) continue;
                    os << "    " << from << " -> " << to << ";\n";
                }
            }
        }
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

namespace {

nlohmann::json upath_to_json_obj(const MuPath& p) {
    nlohmann::json j;
    j["instruction"] = p.instruction;
    j["support"] = std::vector<std::string>(p.support.begin(), p.support.end());
    j["consec-revisit"] =
        std::vector<std::string>(p.consec_revisit.begin(), p.consec_revisit.end());
    j["nonconsec-revisit"] =
        std::vector<std::string>(p.nonconsec_revisit.begin(), p.nonconsec_revisit.end());
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : p.edges) edges.push_back(std::vector<std::string>{a, b});
    j["edges"] = edges;
    nlohmann::json rep = nlohmann::json::array();
    for (const auto& step : p.rep_v) rep.push_back(std::vector<std::string>(step.begin(), step.end()));
    j["representative"] = rep;
    nlohmann::json ns = nlohmann::json::object();
    for (const auto& [src, dsts] : p.next_sets) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& d : dsts) arr.push_back(std::vector<std::string>(d.begin(), d.end()));
        ns[src] = arr;
    }
    j["next-sets"] = ns;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [pl, cs] : p.revisit_counts)
        counts[pl] = std::vector<int>(cs.begin(), cs.end());
    j["revisit-counts"] = counts;
    j["latency"] = p.latency;
    return j;
}

MuPath upath_from_json_obj(const nlohmann::json& j) {
    MuPath p;
    try {
        p.instruction = j.at("instruction").get<std::string>();
        for (const auto& s : j.at("support")) p.support.insert(s.get<std::string>());
        for (const auto& s : j.at("consec-revisit")) p.consec_revisit.insert(s.get<std::string>());
        for (const auto& s : j.at("nonconsec-revisit"))
            p.nonconsec_revisit.insert(s.get<std::string>());
        for (const auto& e : j.at("edges"))
            p.edges.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
        for (const auto& step : j.at("representative"))
            p.rep_v.push_back(std::set<std::string>(step.begin(), step.end()));
        for (const auto& [src, arr] : j.at("next-sets").items()) {
            for (const auto& d : arr) p.next_sets[src].insert(std::set<std::string>(d.begin(), d.end()));
        }
        for (const auto& [pl, arr] : j.at("revisit-counts").items())
            for (const auto& c : arr) p.revisit_counts[pl].insert(c.get<int>());
        p.latency = j.at("latency").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("upath: ") + e.what());
    }
    return p;
}

}  // namespace

std::string upaths_to_json(const std::vector<MuPath>& upaths, uint64_t env_fingerprint) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : upaths) arr.push_back(upath_to_json_obj(p));
    nlohmann::json root;
    root["schema_version"] = 1;
    root["env-fingerprint"] = env_fingerprint;
    root["upaths"] = arr;
    return root.dump(2);
}

std::vector<MuPath> upaths_from_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("parse: ") + e.what());
    }
    if (!root.contains("upaths")) throw SchemaMismatch("missing upaths");
    std::vector<MuPath> out;
    for (const auto& j : root["upaths"]) out.push_back(upath_from_json_obj(j));
    return out;
}

std::string decisions_to_json(const DecisionExtraction& d, uint64_t env_fingerprint) {
    nlohmann::json root;
    root["schema_version"] = 1;
    root["env-fingerprint"] = env_fingerprint;
    root["sources"] = std::vector<std::string>(d.sources.begin(), d.sources.end());
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& dec : d.decisions) {
        nlohmann::json j;
        j["instruction"] = dec.instruction;
        j["src"] = dec.src;
        j["dst"] = std::vector<std::string>(dec.dst.begin(), dec.dst.end());
        arr.push_back(j);
    }
    root["decisions"] = arr;
    return root.dump(2);
}

DecisionExtraction decisions_from_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("parse: ") + e.what());
    }
    DecisionExtraction out;
    try {
        for (const auto& s : root.at("sources")) out.sources.insert(s.get<std::string>());
        for (const auto& j : root.at("decisions")) {
            Decision d;
            d.instruction = j.at("instruction").get<std::string>();
            d.src = j.at("src").get<std::string>();
            for (const auto& pl : j.at("dst")) d.dst.insert(pl.get<std::string>());
            out.decisions.insert(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("decisions: ") + e.what());
    }
    return out;
}

}  // namespace upathlab
