#include "aplan/tree.hpp"

#include <algorithm>
#include <string>

namespace aplan::tree {

namespace {

HostId resolve_host(const HostId& host, const HostId& source, const HostId& target) {
    if (host == kSourcePlaceholder) return source;
    if (host == kTargetPlaceholder) return target;
    return host;
}

Asset instantiate(Asset asset, const HostId& source, const HostId& target) {
    asset.host = resolve_host(asset.host, source, target);
    if (asset.peer) asset.peer = resolve_host(*asset.peer, source, target);
    return asset;
}

bool machines_share_subnet(const Machine& a, const Machine& b) {
    if (a.id == b.id) return true;
    for (const std::string& net : a.subnets) {
        if (b.subnets.count(net)) return true;
    }
    return false;
}

// Ground-truth applicability of one already-instantiated requirement.
// Exploits require positive matches; unknown fields exclude the exploit.
bool requirement_holds(const PlanningContext& ctx, const Asset& req, const HostId& source) {
    switch (req.kind) {
        case AssetKind::Agent:
            return req.host == source;  // a third agent is out of scope at this level
        case AssetKind::IpConnectivity:
            return req.peer && machines_share_subnet(ctx.at(*req.peer), ctx.at(req.host));
        case AssetKind::TcpConnectivity:
            return req.peer && req.port && machines_share_subnet(ctx.at(*req.peer), ctx.at(req.host)) &&
                   ctx.at(req.host).open_tcp_ports.count(*req.port) > 0;
        case AssetKind::UdpConnectivity:
            return req.peer && req.port && machines_share_subnet(ctx.at(*req.peer), ctx.at(req.host)) &&
                   ctx.at(req.host).open_udp_ports.count(*req.port) > 0;
        case AssetKind::OsKnowledge:
            return ctx.at(req.host).os.matches(req.detail) == OsFacts::Match::Yes;
        case AssetKind::PortKnowledge: {
            if (!req.port) return false;
            const Machine& m = ctx.at(req.host);
            return m.open_tcp_ports.count(*req.port) > 0 || m.open_udp_ports.count(*req.port) > 0;
        }
        case AssetKind::ApplicationKnowledge: {
            auto it = req.detail.find("application");
            return it != req.detail.end() && ctx.at(req.host).applications.count(it->second) > 0;
        }
    }
    return false;
}

struct Builder {
    const Scenario& scenario;
    AttackTree& tree;

    int add_fact_provider(int asset_idx) {
        ActionNode fact;
        fact.kind = ActionKind::Plumbing;
        fact.t = 0.0;
        fact.p = 1.0;
        fact.fact = true;
        fact.parent_asset = asset_idx;
        tree.actions.push_back(std::move(fact));
        int idx = static_cast<int>(tree.actions.size()) - 1;
        tree.assets[asset_idx].providers.push_back(idx);
        return idx;
    }

    int add_probe(int asset_idx, ActionKind kind, double t, double p, Port port) {
        ActionNode probe;
        probe.kind = kind;
        probe.t = t;
        probe.p = p;
        probe.port = port;
        probe.parent_asset = asset_idx;
        tree.actions.push_back(std::move(probe));
        int idx = static_cast<int>(tree.actions.size()) - 1;
        tree.assets[asset_idx].providers.push_back(idx);
        return idx;
    }

    bool known_fact(const Asset& asset) const {
        return std::find(scenario.known.begin(), scenario.known.end(), asset) != scenario.known.end();
    }

    // Adds one requirement asset with its acquisition subtree. Knowledge
    // assets get probe providers; facts the attacker already holds get a
    // zero-cost certainty provider.
    int add_requirement(const Asset& req) {
        tree.assets.push_back(AssetNode{req, {}, false});
        int idx = static_cast<int>(tree.assets.size()) - 1;
        if (known_fact(req)) {
            add_fact_provider(idx);
            return idx;
        }
        const ProbeCosts& costs = scenario.probe_costs;
        switch (req.kind) {
            case AssetKind::TcpConnectivity: {
                int probe = add_probe(idx, ActionKind::ProbePort, costs.tcp_t, costs.tcp_p, *req.port);
                // adding the subtree reallocates the action arena, so index
                // only after it is built
                int ip = add_requirement(ip_connectivity_asset(*req.peer, req.host));
                tree.actions[probe].requirements.push_back(ip);
                break;
            }
            case AssetKind::UdpConnectivity: {
                int probe = add_probe(idx, ActionKind::ProbePort, costs.udp_t, costs.udp_p, *req.port);
                int ip = add_requirement(ip_connectivity_asset(*req.peer, req.host));
                tree.actions[probe].requirements.push_back(ip);
                break;
            }
            case AssetKind::IpConnectivity:
                add_probe(idx, ActionKind::ProbeHost, costs.host_t, costs.host_p, 0);
                break;
            case AssetKind::OsKnowledge:
                add_probe(idx, ActionKind::OsDetect, costs.os_detect_t, costs.os_detect_p, 0);
                break;
            case AssetKind::PortKnowledge:
            case AssetKind::ApplicationKnowledge:
                // holds in the recorded workspace; the attacker learns it
                // for free alongside the connectivity probes
                add_fact_provider(idx);
                break;
            case AssetKind::Agent:
                // no provider at this level; the asset stays unreachable
                break;
        }
        return idx;
    }
};

}  // namespace

int AttackTree::live_action_count() const {
    int count = 0;
    for (const ActionNode& a : actions) {
        if (!a.fact && !a.removed) ++count;
    }
    return count;
}

CatalogIndex CatalogIndex::build(const Scenario& scenario) {
    CatalogIndex index;
    for (const Action& e : scenario.exploits) {
        if (e.result.host == kTargetPlaceholder) {
            index.generic.push_back(&e);
        } else {
            index.by_host[e.result.host].push_back(&e);
        }
    }
    return index;
}

PlanningContext PlanningContext::build(const Scenario& scenario) {
    PlanningContext ctx;
    ctx.scenario = &scenario;
    ctx.machines.reserve(scenario.machines.size());
    for (const Machine& m : scenario.machines) ctx.machines.emplace(m.id, &m);
    ctx.catalog = CatalogIndex::build(scenario);
    return ctx;
}

const Machine& PlanningContext::at(const HostId& id) const {
    auto it = machines.find(id);
    if (it == machines.end()) throw InputError("unknown host id: " + id);
    return *it->second;
}

AttackTree build_attack_tree(const Scenario& scenario, const HostId& source, const HostId& target) {
    return build_attack_tree(PlanningContext::build(scenario), source, target);
}

AttackTree build_attack_tree(const PlanningContext& context, const HostId& source,
                             const HostId& target) {
    const Scenario& scenario = *context.scenario;
    if (source == target) throw InputError("attack tree needs distinct source and target");
    context.at(source);
    context.at(target);

    AttackTree tree;
    tree.source = source;
    tree.target = target;
    tree.assets.push_back(AssetNode{agent_asset(target), {}, false});
    tree.root = 0;

    std::vector<const Action*> candidates = context.catalog.generic;
    if (auto it = context.catalog.by_host.find(target); it != context.catalog.by_host.end()) {
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
    // catalog order regardless of how the index grouped them
    std::sort(candidates.begin(), candidates.end());

    Builder builder{scenario, tree};
    for (const Action* templ_ptr : candidates) {
        const Action& templ = *templ_ptr;
        Asset result = instantiate(templ.result, source, target);
        if (result.kind != AssetKind::Agent || result.host != target) continue;

        std::vector<Asset> reqs;
        bool applicable = true;
        for (const Asset& raw : templ.requirements) {
            Asset req = instantiate(raw, source, target);
            if (!requirement_holds(context, req, source)) {
                applicable = false;
                break;
            }
            // the agent on the source host is the premise of the tree
            if (req.kind == AssetKind::Agent) continue;
            reqs.push_back(std::move(req));
        }
        if (!applicable) continue;

        ActionNode node;
        node.kind = templ.kind;
        node.t = templ.t;
        node.p = templ.p;
        node.catalog = &templ;
        node.parent_asset = tree.root;
        tree.actions.push_back(std::move(node));
        int action_idx = static_cast<int>(tree.actions.size()) - 1;
        tree.assets[tree.root].providers.push_back(action_idx);
        std::vector<int> req_nodes;
        req_nodes.reserve(reqs.size());
        for (const Asset& req : reqs) req_nodes.push_back(builder.add_requirement(req));
        tree.actions[action_idx].requirements = std::move(req_nodes);
    }
    return tree;
}

namespace {

struct Solver {
    const AttackTree& tree;
    TreeSolution& sol;

    void eval_asset(int i) {
        const AssetNode& node = tree.assets[i];
        if (node.known) {
            sol.asset_stats[i] = {0.0, 1.0};
            return;
        }
        std::vector<prim::Rated> providers;
        providers.reserve(node.providers.size());
        for (int a : node.providers) {
            if (tree.actions[a].removed) continue;
            eval_action(a);
            providers.push_back({sol.action_stats[a].T, sol.action_stats[a].P, a});
        }
        std::vector<prim::Rated> ordered = prim::choose_order(std::move(providers));
        sol.provider_order[i].reserve(ordered.size());
        for (const prim::Rated& r : ordered) sol.provider_order[i].push_back(r.id);
        sol.asset_stats[i] = prim::seq_stats_or(ordered);
    }

    void eval_action(int a) {
        const ActionNode& node = tree.actions[a];
        std::vector<prim::Rated> reqs;
        reqs.reserve(node.requirements.size());
        for (int r : node.requirements) {
            eval_asset(r);
            reqs.push_back({sol.asset_stats[r].T, sol.asset_stats[r].P, r});
        }
        prim::AndOrder ordered = prim::and_order(std::move(reqs));
        sol.requirement_order[a].reserve(ordered.order.size());
        for (const prim::Rated& r : ordered.order) sol.requirement_order[a].push_back(r.id);
        // the action itself runs once its requirements hold
        ordered.order.push_back({node.t, node.p, -1});
        sol.action_stats[a] = prim::seq_stats_and(ordered.order);
    }

    void expand_asset(int i) {
        if (tree.assets[i].known) return;
        for (int a : sol.provider_order[i]) {
            expand_action(a);
            // alternatives behind a certain provider are never executed
            if (sol.action_stats[a].P == 1.0) break;
        }
    }

    void expand_action(int a) {
        for (int r : sol.requirement_order[a]) expand_asset(r);
        if (!tree.actions[a].fact) sol.plan.push_back(a);
    }
};

}  // namespace

TreeSolution solve_tree(const AttackTree& tree) {
    TreeSolution sol;
    sol.asset_stats.resize(tree.assets.size());
    sol.action_stats.resize(tree.actions.size());
    sol.provider_order.resize(tree.assets.size());
    sol.requirement_order.resize(tree.actions.size());

    Solver solver{tree, sol};
    solver.eval_asset(tree.root);
    solver.expand_asset(tree.root);
    sol.stats = sol.asset_stats[tree.root];
    return sol;
}

AttackTree replan_after(AttackTree tree, int action_node, Outcome outcome) {
    if (action_node < 0 || action_node >= static_cast<int>(tree.actions.size()) ||
        tree.actions[action_node].removed || tree.actions[action_node].fact) {
        throw InputError("replan: action not in tree");
    }
    if (outcome == Outcome::Success) {
        tree.assets[tree.actions[action_node].parent_asset].known = true;
    } else {
        tree.actions[action_node].removed = true;
    }
    return tree;
}

std::string action_id(const AttackTree& tree, const ActionNode& node) {
    switch (node.kind) {
        case ActionKind::Exploit:
        case ActionKind::Plumbing:
            return node.catalog != nullptr ? node.catalog->id : "fact";
        case ActionKind::ProbePort: {
            bool udp = tree.assets[node.parent_asset].asset.kind == AssetKind::UdpConnectivity;
            return (udp ? "udp-connect-p" : "tcp-connect-p") + std::to_string(node.port);
        }
        case ActionKind::ProbeHost:
            return "ip-connect";
        case ActionKind::OsDetect:
            return "os-detect";
    }
    return "?";
}

std::string action_display_name(const AttackTree& tree, const ActionNode& node) {
    switch (node.kind) {
        case ActionKind::Exploit:
        case ActionKind::Plumbing:
            return node.catalog != nullptr ? node.catalog->name : "Known_fact";
        case ActionKind::ProbePort: {
            bool udp = tree.assets[node.parent_asset].asset.kind == AssetKind::UdpConnectivity;
            return (udp ? "UDP_connect_port" : "TCP_connect_port") + std::to_string(node.port);
        }
        case ActionKind::ProbeHost:
            return "IP_connect";
        case ActionKind::OsDetect:
            return "OS_detect";
    }
    return "?";
}

std::vector<PlanStep> plan_steps(const AttackTree& tree, const TreeSolution& solution) {
    std::vector<PlanStep> steps;
    steps.reserve(solution.plan.size());
    for (int a : solution.plan) {
        const ActionNode& node = tree.actions[a];
        PlanStep step;
        step.action_id = action_id(tree, node);
        step.name = action_display_name(tree, node);
        const Asset& provided = tree.assets[node.parent_asset].asset;
        step.source = provided.peer ? *provided.peer : tree.source;
        step.target = provided.host;
        step.t = node.t;
        step.p = node.p;
        steps.push_back(std::move(step));
    }
    return steps;
}

}  // namespace aplan::tree
