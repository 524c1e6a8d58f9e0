#include "aplan/core.hpp"

#include <algorithm>
#include <cmath>

namespace aplan {

const char* to_string(AssetKind kind) {
    switch (kind) {
        case AssetKind::Agent: return "agent";
        case AssetKind::IpConnectivity: return "ip-connectivity";
        case AssetKind::TcpConnectivity: return "tcp-connectivity";
        case AssetKind::UdpConnectivity: return "udp-connectivity";
        case AssetKind::OsKnowledge: return "os-knowledge";
        case AssetKind::PortKnowledge: return "port-knowledge";
        case AssetKind::ApplicationKnowledge: return "application-knowledge";
    }
    return "?";
}

AssetKind asset_kind_from_string(const std::string& name) {
    if (name == "agent") return AssetKind::Agent;
    if (name == "ip-connectivity") return AssetKind::IpConnectivity;
    if (name == "tcp-connectivity") return AssetKind::TcpConnectivity;
    if (name == "udp-connectivity") return AssetKind::UdpConnectivity;
    if (name == "os-knowledge") return AssetKind::OsKnowledge;
    if (name == "port-knowledge") return AssetKind::PortKnowledge;
    if (name == "application-knowledge") return AssetKind::ApplicationKnowledge;
    throw InputError("unknown asset kind: " + name);
}

const char* to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::Exploit: return "exploit";
        case ActionKind::ProbePort: return "probe-port";
        case ActionKind::ProbeHost: return "probe-host";
        case ActionKind::OsDetect: return "os-detect";
        case ActionKind::Plumbing: return "plumbing";
    }
    return "?";
}

ActionKind action_kind_from_string(const std::string& name) {
    if (name == "exploit") return ActionKind::Exploit;
    if (name == "probe-port") return ActionKind::ProbePort;
    if (name == "probe-host") return ActionKind::ProbeHost;
    if (name == "os-detect") return ActionKind::OsDetect;
    if (name == "plumbing") return ActionKind::Plumbing;
    throw InputError("unknown action kind: " + name);
}

Asset agent_asset(HostId host) {
    Asset a;
    a.kind = AssetKind::Agent;
    a.host = std::move(host);
    return a;
}

Asset tcp_connectivity_asset(HostId source, HostId target, Port port) {
    Asset a;
    a.kind = AssetKind::TcpConnectivity;
    a.host = std::move(target);
    a.peer = std::move(source);
    a.port = port;
    return a;
}

Asset udp_connectivity_asset(HostId source, HostId target, Port port) {
    Asset a;
    a.kind = AssetKind::UdpConnectivity;
    a.host = std::move(target);
    a.peer = std::move(source);
    a.port = port;
    return a;
}

Asset ip_connectivity_asset(HostId source, HostId target) {
    Asset a;
    a.kind = AssetKind::IpConnectivity;
    a.host = std::move(target);
    a.peer = std::move(source);
    return a;
}

Asset os_knowledge_asset(HostId host, std::map<std::string, std::string> facts) {
    Asset a;
    a.kind = AssetKind::OsKnowledge;
    a.host = std::move(host);
    a.detail = std::move(facts);
    return a;
}

void Action::validate() const {
    if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) {
        throw InputError("action " + id + ": probability must be in [0,1]");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InputError("action " + id + ": cost must be finite and >= 0");
    }
    if (kind == ActionKind::Exploit) {
        if (result.kind != AssetKind::Agent) {
            throw InputError("action " + id + ": exploit must produce an agent asset");
        }
        bool has_connectivity = std::any_of(requirements.begin(), requirements.end(), [](const Asset& r) {
            return r.kind == AssetKind::IpConnectivity || r.kind == AssetKind::TcpConnectivity ||
                   r.kind == AssetKind::UdpConnectivity;
        });
        if (!has_connectivity) {
            throw InputError("action " + id + ": exploit requires a connectivity asset");
        }
    }
    for (const Asset& r : requirements) {
        if ((r.kind == AssetKind::TcpConnectivity || r.kind == AssetKind::UdpConnectivity) && !r.port) {
            throw InputError("action " + id + ": tcp/udp connectivity requirement needs a port");
        }
    }
}

OsFacts::Match OsFacts::matches(const std::map<std::string, std::string>& required) const {
    auto field = [this](const std::string& key) -> const std::string* {
        if (key == "name") return &name;
        if (key == "version") return &version;
        if (key == "edition") return &edition;
        if (key == "service-pack") return &service_pack;
        if (key == "distro") return &distro;
        if (key == "kernel") return &kernel;
        if (key == "architecture") return &architecture;
        return nullptr;
    };
    bool unknown = false;
    for (const auto& [key, value] : required) {
        const std::string* actual = field(key);
        if (actual == nullptr) throw InputError("unknown os fact: " + key);
        if (actual->empty()) {
            unknown = true;
        } else if (*actual != value) {
            return Match::No;
        }
    }
    return unknown ? Match::Unknown : Match::Yes;
}

std::map<std::string, std::string> OsFacts::to_detail() const {
    std::map<std::string, std::string> out;
    if (!name.empty()) out["name"] = name;
    if (!version.empty()) out["version"] = version;
    if (!edition.empty()) out["edition"] = edition;
    if (!service_pack.empty()) out["service-pack"] = service_pack;
    if (!distro.empty()) out["distro"] = distro;
    if (!kernel.empty()) out["kernel"] = kernel;
    if (!architecture.empty()) out["architecture"] = architecture;
    return out;
}

const Machine* Scenario::find(const HostId& id) const {
    for (const Machine& m : machines) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

const Machine& Scenario::at(const HostId& id) const {
    const Machine* m = find(id);
    if (m == nullptr) throw InputError("unknown host id: " + id);
    return *m;
}

void Scenario::validate() const {
    std::set<std::string> ids;
    std::set<std::string> declared(subnets.begin(), subnets.end());
    for (const Machine& m : machines) {
        if (m.id.empty()) throw InputError("machine with empty id");
        if (!ids.insert(m.id).second) throw InputError("duplicate machine id: " + m.id);
        for (Port p : m.open_tcp_ports) {
            if (p == 0) throw InputError("machine " + m.id + ": port 0 is out of range");
        }
        for (Port p : m.open_udp_ports) {
            if (p == 0) throw InputError("machine " + m.id + ": port 0 is out of range");
        }
        for (const std::string& s : m.subnets) {
            if (!declared.count(s)) {
                throw InputError("machine " + m.id + " references undeclared subnet: " + s);
            }
        }
        if (!(m.value >= 0.0) || !std::isfinite(m.value)) {
            throw InputError("machine " + m.id + ": value must be finite and >= 0");
        }
    }
    if (find(source) == nullptr) throw InputError("source machine does not exist: " + source);
    for (const Asset& g : goals) {
        if (find(g.host) == nullptr) throw InputError("goal references unknown host: " + g.host);
    }
    auto placeholder = [](const HostId& h) { return h == kSourcePlaceholder || h == kTargetPlaceholder; };
    for (const Action& e : exploits) {
        e.validate();
        if (!placeholder(e.result.host) && find(e.result.host) == nullptr) {
            throw InputError("exploit " + e.id + " targets unknown host: " + e.result.host);
        }
    }
}

bool ip_connectivity(const Scenario& scenario, const HostId& s, const HostId& t) {
    const Machine& ms = scenario.at(s);
    const Machine& mt = scenario.at(t);
    if (s == t) return true;  // a machine reaches itself
    for (const std::string& net : ms.subnets) {
        if (mt.subnets.count(net)) return true;
    }
    return false;
}

bool tcp_connectivity(const Scenario& scenario, const HostId& s, const HostId& t, Port port) {
    if (port == 0) throw InputError("port out of range: 0");
    return ip_connectivity(scenario, s, t) && scenario.at(t).open_tcp_ports.count(port) > 0;
}

bool udp_connectivity(const Scenario& scenario, const HostId& s, const HostId& t, Port port) {
    if (port == 0) throw InputError("port out of range: 0");
    return ip_connectivity(scenario, s, t) && scenario.at(t).open_udp_ports.count(port) > 0;
}

void Plan::recompute_totals() {
    double total = 0.0;
    double reach = 1.0;
    for (const PlanHop& hop : hops) {
        total += reach * hop.time;
        reach *= hop.prob;
    }
    expected_cost = total;
    success_prob = hops.empty() ? 1.0 : reach;
}

}  // namespace aplan
