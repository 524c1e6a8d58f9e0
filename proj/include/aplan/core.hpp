#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aplan/errors.hpp"

namespace aplan {

using HostId = std::string;
using Port = std::uint16_t;

// Placeholder host ids used by catalog templates; resolved when a tree is
// built for a concrete (source, target) pair.
inline constexpr const char* kSourcePlaceholder = "@source";
inline constexpr const char* kTargetPlaceholder = "@target";

enum class AssetKind {
    Agent,
    IpConnectivity,
    TcpConnectivity,
    UdpConnectivity,
    OsKnowledge,
    PortKnowledge,
    ApplicationKnowledge,
};

const char* to_string(AssetKind kind);
AssetKind asset_kind_from_string(const std::string& name);

// A fact or capability the attacker obtains: an installed agent,
// connectivity between two hosts, or knowledge about the target.
struct Asset {
    AssetKind kind = AssetKind::Agent;
    HostId host;
    std::optional<HostId> peer;  // connectivity source host
    std::optional<Port> port;    // tcp/udp connectivity and port knowledge
    std::map<std::string, std::string> detail;  // os facts, application name

    bool operator==(const Asset& other) const = default;
};

Asset agent_asset(HostId host);
Asset tcp_connectivity_asset(HostId source, HostId target, Port port);
Asset udp_connectivity_asset(HostId source, HostId target, Port port);
Asset ip_connectivity_asset(HostId source, HostId target);
Asset os_knowledge_asset(HostId host, std::map<std::string, std::string> facts);

enum class ActionKind { Exploit, ProbePort, ProbeHost, OsDetect, Plumbing };

const char* to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& name);

// An attack step: success probability p, scalar cost t (expected seconds),
// requirement assets and the single asset it provides.
struct Action {
    std::string id;
    std::string name;
    ActionKind kind = ActionKind::Exploit;
    double p = 1.0;
    double t = 0.0;
    std::vector<Asset> requirements;
    Asset result;

    void validate() const;  // throws InputError
};

// Operating system facts; an empty string means unknown. Requirement
// matching is three-valued: an exploit applies only if every field it
// specifies matches positively.
struct OsFacts {
    std::string name;
    std::string version;
    std::string edition;
    std::string service_pack;
    std::string distro;
    std::string kernel;
    std::string architecture;

    bool operator==(const OsFacts& other) const = default;

    // match / mismatch / unknown against a required fact set
    enum class Match { Yes, No, Unknown };
    Match matches(const std::map<std::string, std::string>& required) const;
    std::map<std::string, std::string> to_detail() const;
};

// One possible OS configuration of a partially known machine, used by the
// POMDP construction. `detect` is the label an OS-detection action reports
// for this candidate (several candidates may share one label).
struct OsCandidate {
    std::string name;
    std::string detect;
    double weight = 0.0;
};

// Prior over one (port, service) branch of the configuration lattice.
struct BranchPrior {
    Port port = 0;
    std::string service;
    double p_open = 0.5;        // port open
    double p_service = 0.5;     // service present, given open
    double p_vulnerable = 0.5;  // vulnerable, given service
};

// Version-updating process for the OS factor: per time step a version
// stays, advances to the next, or jumps to the latest. Entries are indexed
// by position in os_candidates.
struct OsChainSpec {
    std::vector<double> stay;
    std::vector<double> advance;
    std::vector<double> jump;
    std::vector<double> v0;  // belief at the last pentest
};

struct MachineUncertainty {
    std::vector<OsCandidate> os_candidates;
    std::vector<BranchPrior> branches;      // optional priors per (port, service)
    std::optional<OsChainSpec> os_chain;    // ages os_candidates weights by T days
};

struct Machine {
    HostId id;
    OsFacts os;
    std::set<Port> open_tcp_ports;
    std::set<Port> open_udp_ports;
    std::set<std::string> applications;
    std::set<std::string> subnets;
    double value = 0.0;  // reward for compromising this machine
    std::optional<MachineUncertainty> uncertainty;
};

// Costs of the synthesized information-gathering actions that feed
// attack-tree construction.
struct ProbeCosts {
    double host_t = 1.0;
    double host_p = 1.0;
    double tcp_t = 1.0;
    double tcp_p = 1.0;
    double udp_t = 2.0;
    double udp_p = 1.0;
    double os_detect_t = 5.0;
    double os_detect_p = 1.0;
};

struct Scenario {
    std::vector<Machine> machines;
    std::vector<std::string> subnets;
    std::vector<Action> exploits;  // catalog templates (@source/@target hosts)
    HostId source;
    std::vector<Asset> goals;
    std::vector<Asset> known;  // assets the attacker starts out knowing
    ProbeCosts probe_costs;

    const Machine* find(const HostId& id) const;
    const Machine& at(const HostId& id) const;  // throws InputError
    void validate() const;                      // throws InputError
};

bool ip_connectivity(const Scenario& scenario, const HostId& s, const HostId& t);
bool tcp_connectivity(const Scenario& scenario, const HostId& s, const HostId& t, Port port);
bool udp_connectivity(const Scenario& scenario, const HostId& s, const HostId& t, Port port);

struct PlanStep {
    std::string action_id;
    std::string name;
    HostId source;
    HostId target;
    double t = 0.0;
    double p = 1.0;
};

// One (source -> target) hop of a cross-machine plan with the compound
// stats of its attack-tree solution.
struct PlanHop {
    HostId source;
    HostId target;
    double time = 0.0;
    double prob = 1.0;
    std::size_t first_step = 0;
    std::size_t step_count = 0;
};

struct Plan {
    std::vector<PlanStep> steps;
    std::vector<PlanHop> hops;
    double expected_cost = 0.0;
    double success_prob = 1.0;
    std::string status = "ok";

    bool feasible() const { return success_prob > 0.0; }

    // Sequential AND composition over hops:
    //   T = sum_k T_k * prod_{j<k} P_j,   P = prod_k P_k
    void recompute_totals();
};

}  // namespace aplan
