#include "aplan/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aplan::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json asset_to_json(const Asset& asset) {
    ordered_json j;
    j["kind"] = to_string(asset.kind);
    j["host"] = asset.host;
    if (asset.peer) j["peer"] = *asset.peer;
    if (asset.port) j["port"] = *asset.port;
    if (!asset.detail.empty()) j["detail"] = asset.detail;
    return j;
}

Asset asset_from_json(const json& j) {
    Asset asset;
    asset.kind = asset_kind_from_string(j.at("kind").get<std::string>());
    asset.host = j.at("host").get<std::string>();
    if (j.contains("peer")) asset.peer = j["peer"].get<std::string>();
    if (j.contains("port")) {
        int port = j["port"].get<int>();
        if (port < 1 || port > 65535) throw InputError("port out of range: " + std::to_string(port));
        asset.port = static_cast<Port>(port);
    }
    if (j.contains("detail")) {
        for (const auto& [key, value] : j["detail"].items()) {
            asset.detail[key] = value.get<std::string>();
        }
    }
    return asset;
}

ordered_json action_to_json(const Action& action) {
    ordered_json j;
    j["id"] = action.id;
    j["name"] = action.name;
    j["kind"] = to_string(action.kind);
    j["p"] = action.p;
    j["t"] = action.t;
    j["requirements"] = ordered_json::array();
    for (const Asset& r : action.requirements) j["requirements"].push_back(asset_to_json(r));
    j["result"] = asset_to_json(action.result);
    return j;
}

Action action_from_json(const json& j) {
    Action action;
    action.id = j.at("id").get<std::string>();
    action.name = j.value("name", action.id);
    action.kind = action_kind_from_string(j.value("kind", std::string("exploit")));
    action.p = j.value("p", 1.0);
    action.t = j.value("t", 0.0);
    if (j.contains("requirements")) {
        for (const json& r : j["requirements"]) action.requirements.push_back(asset_from_json(r));
    }
    action.result = asset_from_json(j.at("result"));
    return action;
}

ordered_json os_to_json(const OsFacts& os) {
    ordered_json j;
    auto put = [&j](const char* key, const std::string& value) {
        if (!value.empty()) j[key] = value;
    };
    put("name", os.name);
    put("version", os.version);
    put("edition", os.edition);
    put("service-pack", os.service_pack);
    put("distro", os.distro);
    put("kernel", os.kernel);
    put("architecture", os.architecture);
    return j;
}

OsFacts os_from_json(const json& j) {
    OsFacts os;
    os.name = j.value("name", "");
    os.version = j.value("version", "");
    os.edition = j.value("edition", "");
    os.service_pack = j.value("service-pack", "");
    os.distro = j.value("distro", "");
    os.kernel = j.value("kernel", "");
    os.architecture = j.value("architecture", "");
    return os;
}

ordered_json uncertainty_to_json(const MachineUncertainty& u) {
    ordered_json j;
    j["os-candidates"] = ordered_json::array();
    for (const OsCandidate& c : u.os_candidates) {
        ordered_json cj;
        cj["name"] = c.name;
        cj["detect"] = c.detect;
        cj["weight"] = c.weight;
        j["os-candidates"].push_back(cj);
    }
    if (!u.branches.empty()) {
        j["branches"] = ordered_json::array();
        for (const BranchPrior& b : u.branches) {
            ordered_json bj;
            bj["port"] = b.port;
            bj["service"] = b.service;
            bj["p-open"] = b.p_open;
            bj["p-service"] = b.p_service;
            bj["p-vulnerable"] = b.p_vulnerable;
            j["branches"].push_back(bj);
        }
    }
    if (u.os_chain) {
        ordered_json cj;
        cj["stay"] = u.os_chain->stay;
        cj["advance"] = u.os_chain->advance;
        cj["jump"] = u.os_chain->jump;
        cj["v0"] = u.os_chain->v0;
        j["os-chain"] = cj;
    }
    return j;
}

MachineUncertainty uncertainty_from_json(const json& j) {
    MachineUncertainty u;
    for (const json& cj : j.at("os-candidates")) {
        OsCandidate c;
        c.name = cj.at("name").get<std::string>();
        c.detect = cj.value("detect", c.name);
        c.weight = cj.value("weight", 1.0);
        u.os_candidates.push_back(std::move(c));
    }
    if (j.contains("branches")) {
        for (const json& bj : j["branches"]) {
            BranchPrior b;
            b.port = static_cast<Port>(bj.value("port", 0));
            b.service = bj.value("service", std::string());
            b.p_open = bj.value("p-open", 0.5);
            b.p_service = bj.value("p-service", 0.5);
            b.p_vulnerable = bj.value("p-vulnerable", 0.5);
            u.branches.push_back(std::move(b));
        }
    }
    if (j.contains("os-chain")) {
        OsChainSpec chain;
        const json& cj = j["os-chain"];
        chain.stay = cj.at("stay").get<std::vector<double>>();
        chain.advance = cj.at("advance").get<std::vector<double>>();
        chain.jump = cj.at("jump").get<std::vector<double>>();
        chain.v0 = cj.at("v0").get<std::vector<double>>();
        u.os_chain = std::move(chain);
    }
    return u;
}

template <typename T>
ordered_json sorted_array(const std::set<T>& values) {
    ordered_json arr = ordered_json::array();
    for (const T& v : values) arr.push_back(v);
    return arr;
}

}  // namespace

Scenario scenario_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("scenario parse error: ") + e.what());
    }
    try {
        Scenario s;
        for (const json& mj : doc.at("machines")) {
            Machine m;
            m.id = mj.at("id").get<std::string>();
            if (mj.contains("os")) m.os = os_from_json(mj["os"]);
            for (int p : mj.value("open-tcp-ports", std::vector<int>{})) {
                if (p < 1 || p > 65535) throw InputError("port out of range: " + std::to_string(p));
                m.open_tcp_ports.insert(static_cast<Port>(p));
            }
            for (int p : mj.value("open-udp-ports", std::vector<int>{})) {
                if (p < 1 || p > 65535) throw InputError("port out of range: " + std::to_string(p));
                m.open_udp_ports.insert(static_cast<Port>(p));
            }
            for (const auto& a : mj.value("applications", std::vector<std::string>{})) {
                m.applications.insert(a);
            }
            for (const auto& n : mj.value("subnets", std::vector<std::string>{})) {
                m.subnets.insert(n);
            }
            m.value = mj.value("value", 0.0);
            if (mj.contains("uncertainty")) m.uncertainty = uncertainty_from_json(mj["uncertainty"]);
            s.machines.push_back(std::move(m));
        }
        s.subnets = doc.at("subnets").get<std::vector<std::string>>();
        for (const json& ej : doc.at("exploits")) s.exploits.push_back(action_from_json(ej));
        s.source = doc.at("source").get<std::string>();
        for (const json& gj : doc.at("goals")) s.goals.push_back(asset_from_json(gj));
        if (doc.contains("known")) {
            for (const json& kj : doc["known"]) s.known.push_back(asset_from_json(kj));
        }
        if (doc.contains("probe-costs")) {
            const json& pj = doc["probe-costs"];
            s.probe_costs.host_t = pj.value("host-t", s.probe_costs.host_t);
            s.probe_costs.host_p = pj.value("host-p", s.probe_costs.host_p);
            s.probe_costs.tcp_t = pj.value("tcp-t", s.probe_costs.tcp_t);
            s.probe_costs.tcp_p = pj.value("tcp-p", s.probe_costs.tcp_p);
            s.probe_costs.udp_t = pj.value("udp-t", s.probe_costs.udp_t);
            s.probe_costs.udp_p = pj.value("udp-p", s.probe_costs.udp_p);
            s.probe_costs.os_detect_t = pj.value("os-detect-t", s.probe_costs.os_detect_t);
            s.probe_costs.os_detect_p = pj.value("os-detect-p", s.probe_costs.os_detect_p);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("scenario structure error: ") + e.what());
    }
}

std::string scenario_to_string(const Scenario& scenario) {
    ordered_json doc;
    doc["machines"] = ordered_json::array();
    for (const Machine& m : scenario.machines) {
        ordered_json mj;
        mj["id"] = m.id;
        mj["os"] = os_to_json(m.os);
        mj["open-tcp-ports"] = sorted_array(m.open_tcp_ports);
        mj["open-udp-ports"] = sorted_array(m.open_udp_ports);
        mj["applications"] = sorted_array(m.applications);
        mj["subnets"] = sorted_array(m.subnets);
        mj["value"] = m.value;
        if (m.uncertainty) mj["uncertainty"] = uncertainty_to_json(*m.uncertainty);
        doc["machines"].push_back(mj);
    }
    doc["subnets"] = scenario.subnets;
    doc["exploits"] = ordered_json::array();
    for (const Action& e : scenario.exploits) doc["exploits"].push_back(action_to_json(e));
    doc["source"] = scenario.source;
    doc["goals"] = ordered_json::array();
    for (const Asset& g : scenario.goals) doc["goals"].push_back(asset_to_json(g));
    if (!scenario.known.empty()) {
        doc["known"] = ordered_json::array();
        for (const Asset& k : scenario.known) doc["known"].push_back(asset_to_json(k));
    }
    return doc.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) { return scenario_from_string(read_file(path)); }

void save_scenario(const Scenario& scenario, const std::string& path) {
    write_file(path, scenario_to_string(scenario));
}

std::string plan_to_json(const Plan& plan) {
    ordered_json doc;
    doc["status"] = plan.status;
    doc["expected-cost"] = plan.expected_cost;
    doc["success-probability"] = plan.success_prob;
    doc["steps"] = ordered_json::array();
    for (const PlanStep& step : plan.steps) {
        ordered_json sj;
        sj["action"] = step.action_id;
        sj["name"] = step.name;
        sj["source"] = step.source;
        sj["target"] = step.target;
        sj["t"] = step.t;
        sj["p"] = step.p;
        doc["steps"].push_back(sj);
    }
    doc["hops"] = ordered_json::array();
    for (const PlanHop& hop : plan.hops) {
        ordered_json hj;
        hj["source"] = hop.source;
        hj["target"] = hop.target;
        hj["time"] = hop.time;
        hj["prob"] = hop.prob;
        doc["hops"].push_back(hj);
    }
    return doc.dump(2) + "\n";
}

std::string plan_to_text(const Plan& plan) {
    std::ostringstream out;
    if (!plan.feasible()) {
        out << "no plan: " << plan.status << "\n";
        return out.str();
    }
    int n = 0;
    for (const PlanStep& step : plan.steps) {
        out << (n < 10 ? " " : "") << n << ": " << step.name << " " << step.source << " "
            << step.target << "\n";
        ++n;
    }
    out << "expected cost T = " << plan.expected_cost << "\n";
    out << "success probability P = " << plan.success_prob << "\n";
    return out.str();
}

std::string graph_to_json(const graph::AssetGraph& g) {
    ordered_json doc;
    doc["nodes"] = g.nodes;
    doc["source"] = g.nodes[g.source];
    doc["edges"] = ordered_json::array();
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g.size(); ++j) {
            if (i == j || !g.edge(i, j).reachable()) continue;
            ordered_json ej;
            ej["from"] = g.nodes[i];
            ej["to"] = g.nodes[j];
            ej["time"] = g.edge(i, j).time;
            ej["prob"] = g.edge(i, j).prob;
            doc["edges"].push_back(ej);
        }
    }
    return doc.dump(2) + "\n";
}

std::string tree_to_json(const tree::AttackTree& t, const tree::TreeSolution& solution) {
    ordered_json doc;
    doc["source"] = t.source;
    doc["target"] = t.target;
    doc["root"] = t.root;
    doc["time"] = solution.stats.T;
    doc["prob"] = solution.stats.P;
    doc["assets"] = ordered_json::array();
    for (std::size_t i = 0; i < t.assets.size(); ++i) {
        ordered_json aj;
        aj["asset"] = asset_to_json(t.assets[i].asset);
        aj["known"] = t.assets[i].known;
        aj["time"] = solution.asset_stats[i].T;
        aj["prob"] = solution.asset_stats[i].P;
        aj["provider-order"] = solution.provider_order[i];
        doc["assets"].push_back(aj);
    }
    doc["actions"] = ordered_json::array();
    for (std::size_t a = 0; a < t.actions.size(); ++a) {
        ordered_json nj;
        nj["name"] = tree::action_display_name(t, t.actions[a]);
        nj["kind"] = to_string(t.actions[a].kind);
        nj["t"] = t.actions[a].t;
        nj["p"] = t.actions[a].p;
        nj["fact"] = t.actions[a].fact;
        nj["removed"] = t.actions[a].removed;
        nj["parent-asset"] = t.actions[a].parent_asset;
        nj["time"] = solution.action_stats[a].T;
        nj["prob"] = solution.action_stats[a].P;
        nj["requirement-order"] = solution.requirement_order[a];
        doc["actions"].push_back(nj);
    }
    doc["plan"] = solution.plan;
    return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
}

}  // namespace aplan::io
