#include "aplan/scenario_gen.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "aplan/rng.hpp"

namespace aplan::gen {

namespace {

struct MachineType {
    const char* label;
    double share;
    OsFacts os;
    std::vector<Port> ports;
    bool server;
};

const std::vector<MachineType>& machine_types() {
    static const std::vector<MachineType> types = {
        {"winxp", 0.50, {"Windows", "XP", "", "SP3", "", "", "i386"}, {139, 445}, false},
        {"win2003",
         0.14,
         {"Windows", "2003", "", "SP2", "", "", "i386"},
         {25, 80, 110, 139, 443, 445, 3389},
         true},
        {"ubuntu", 0.27, {"Linux", "8.04", "", "", "Ubuntu", "", "i386"}, {22}, false},
        {"debian",
         0.09,
         {"Linux", "4.0", "", "", "Debian", "", "i386"},
         {21, 22, 23, 25, 80, 110, 443},
         true},
    };
    return types;
}

// largest-remainder quotas so the realized shares stay within rounding
std::vector<int> type_quotas(int targets) {
    const auto& types = machine_types();
    std::vector<int> counts(types.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
        double exact = types[i].share * targets;
        counts[i] = static_cast<int>(exact);
        assigned += counts[i];
        remainders.push_back({exact - counts[i], i});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; assigned < targets; ++k, ++assigned) {
        ++counts[remainders[k % remainders.size()].second];
    }
    return counts;
}

Action make_exploit(const Machine& target, int index, SplitMix64& rng) {
    Action e;
    e.id = "exploit-" + target.id + "-" + std::to_string(index);
    e.name = "Exploit_" + target.id + "_" + std::to_string(index);
    e.kind = ActionKind::Exploit;
    e.p = rng.uniform(0.3, 0.95);
    e.t = rng.uniform(2.0, 60.0);
    std::map<std::string, std::string> facts;
    facts["name"] = target.os.name;
    if (!target.os.version.empty()) facts["version"] = target.os.version;
    e.requirements.push_back(os_knowledge_asset(target.id, std::move(facts)));
    std::vector<Port> ports(target.open_tcp_ports.begin(), target.open_tcp_ports.end());
    Port port = ports[rng.next_below(ports.size())];
    e.requirements.push_back(tcp_connectivity_asset(kSourcePlaceholder, target.id, port));
    e.result = agent_asset(target.id);
    return e;
}

}  // namespace

Scenario generate_subnet_star(int machines, int exploit_count, std::uint64_t seed) {
    if (machines < 2) throw InputError("generate_subnet_star: need at least 2 machines");
    if (exploit_count < machines) {
        throw InputError("generate_subnet_star: need at least one exploit per machine");
    }
    SplitMix64 rng = SplitMix64::substream(seed, 0x5741u);

    Scenario s;
    s.subnets = {"main", "net1", "net2", "net3", "net4", "net5"};

    Machine attacker;
    attacker.id = "localhost";
    attacker.os = {"Linux", "8.04", "", "", "Ubuntu", "", "i386"};
    attacker.subnets = {"main"};
    s.machines.push_back(std::move(attacker));
    s.source = "localhost";

    const int targets = machines - 1;
    std::vector<int> quotas = type_quotas(targets);
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < quotas.size(); ++i) {
        labels.insert(labels.end(), quotas[i], i);
    }
    for (std::size_t i = labels.size(); i > 1; --i) {
        std::swap(labels[i - 1], labels[rng.next_below(i)]);
    }

    for (int k = 0; k < targets; ++k) {
        const MachineType& type = machine_types()[labels[k]];
        Machine m;
        m.id = "host" + std::to_string(k + 1);
        m.os = type.os;
        m.open_tcp_ports.insert(type.ports.begin(), type.ports.end());
        if (type.server) {
            // every server loses one canonical port so machines differ
            std::vector<Port> ports(type.ports.begin(), type.ports.end());
            m.open_tcp_ports.erase(ports[rng.next_below(ports.size())]);
        }
        m.subnets = {"main", "net" + std::to_string(k % 5 + 1)};
        m.value = 1.0;
        s.machines.push_back(std::move(m));
    }

    for (int k = 0; k < targets; ++k) {
        const Machine& target = s.machines[static_cast<std::size_t>(k) + 1];
        int count = exploit_count / targets + (k < exploit_count % targets ? 1 : 0);
        for (int j = 0; j < count; ++j) {
            s.exploits.push_back(make_exploit(target, j, rng));
        }
    }

    s.goals.push_back(agent_asset(s.machines.back().id));
    s.validate();
    return s;
}

Scenario generate_chain(int depth, std::uint64_t seed) {
    if (depth < 1) throw InputError("generate_chain: depth must be >= 1");
    SplitMix64 rng = SplitMix64::substream(seed, 0xC4A1u);

    Scenario s;
    for (int k = 0; k <= depth; ++k) s.subnets.push_back("net" + std::to_string(k));

    Machine attacker;
    attacker.id = "localhost";
    attacker.os = {"Linux", "8.04", "", "", "Ubuntu", "", "i386"};
    attacker.subnets = {"net0"};
    s.machines.push_back(std::move(attacker));
    s.source = "localhost";

    const auto& types = machine_types();
    for (int k = 1; k <= depth; ++k) {
        const MachineType& type = types[static_cast<std::size_t>(k - 1) % types.size()];
        Machine m;
        m.id = "m" + std::to_string(k);
        m.os = type.os;
        m.open_tcp_ports.insert(type.ports.begin(), type.ports.end());
        m.subnets = {"net" + std::to_string(k - 1), "net" + std::to_string(k)};
        m.value = 1.0;
        s.machines.push_back(std::move(m));
    }
    for (int k = 1; k <= depth; ++k) {
        s.exploits.push_back(make_exploit(s.machines[k], 0, rng));
    }
    s.goals.push_back(agent_asset("m" + std::to_string(depth)));
    s.validate();
    return s;
}

}  // namespace aplan::gen
