#pragma once

#include <unordered_map>
#include <vector>

#include "aplan/core.hpp"
#include "aplan/primitives.hpp"

namespace aplan::tree {

// AND node: an action together with the assets it needs. The action itself
// always executes after its requirements; only the requirements are
// reordered among themselves.
struct ActionNode {
    ActionKind kind = ActionKind::Plumbing;
    double t = 0.0;
    double p = 1.0;
    Port port = 0;                    // probes: the probed port
    const Action* catalog = nullptr;  // exploits: the catalog entry
    int parent_asset = -1;
    std::vector<int> requirements;  // asset node ids
    bool fact = false;              // zero-cost certainty provider
    bool removed = false;           // pruned by replan
};

// OR node: an asset together with the actions that can provide it.
struct AssetNode {
    Asset asset;
    std::vector<int> providers;  // action node ids
    bool known = false;          // already satisfied (replan success)
};

// Alternating asset/action layers rooted at the goal agent asset for one
// fixed (source, target) pair. Requirement assets are duplicated per
// action, so this is a tree, never a DAG.
struct AttackTree {
    HostId source;
    HostId target;
    std::vector<AssetNode> assets;
    std::vector<ActionNode> actions;
    int root = -1;

    // number of executable (non-fact, non-removed) actions
    int live_action_count() const;
};

// Catalog templates grouped by their concrete target host, so the M^2
// pairwise builds do not rescan the whole catalog.
struct CatalogIndex {
    std::vector<const Action*> generic;  // templates aimed at @target
    std::unordered_map<HostId, std::vector<const Action*>> by_host;

    static CatalogIndex build(const Scenario& scenario);
};

// Lookup structures shared by the M^2 pairwise solves; read-only once built,
// safe to share across worker threads.
struct PlanningContext {
    const Scenario* scenario = nullptr;
    std::unordered_map<HostId, const Machine*> machines;
    CatalogIndex catalog;

    static PlanningContext build(const Scenario& scenario);
    const Machine& at(const HostId& id) const;  // throws InputError
};

AttackTree build_attack_tree(const PlanningContext& context, const HostId& source,
                             const HostId& target);
AttackTree build_attack_tree(const Scenario& scenario, const HostId& source, const HostId& target);

struct TreeSolution {
    prim::SeqStats stats;  // root annotation: the (Time, Prob) edge label
    std::vector<prim::SeqStats> asset_stats;        // per asset node
    std::vector<prim::SeqStats> action_stats;       // per action node (AND group)
    std::vector<std::vector<int>> provider_order;   // per asset: providers, execution order
    std::vector<std::vector<int>> requirement_order;  // per action: requirement assets, execution order
    std::vector<int> plan;  // action node ids, depth-first expansion in solved order
};

// Bottom-up reduction: requirements of every action combine as an AND
// group, providers of every asset as an OR group. An unreachable root
// yields (0, 0) by the empty-OR convention.
TreeSolution solve_tree(const AttackTree& tree);

enum class Outcome { Success, Failure };

// Prunes the tree after executing one action: success turns the provided
// asset into a known fact, failure removes the action. The caller
// re-solves the returned tree.
AttackTree replan_after(AttackTree tree, int action_node, Outcome outcome);

// Plan steps for one solved tree, in execution order.
std::vector<PlanStep> plan_steps(const AttackTree& tree, const TreeSolution& solution);

// Display name and id for a tree action (probes are synthesized, exploits
// come from the catalog).
std::string action_display_name(const AttackTree& tree, const ActionNode& node);
std::string action_id(const AttackTree& tree, const ActionNode& node);

}  // namespace aplan::tree
