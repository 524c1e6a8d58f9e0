#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aplan/graph.hpp"
#include "aplan/primitives.hpp"
#include "aplan/rng.hpp"
#include "aplan/tree.hpp"

namespace aplan::oracle {

// ---------------------------------------------------------------------------
// Brute-force orderings

struct OrderResult {
    std::vector<int> order;  // indices into the input list
    double T = 0.0;
};

// Evaluates seq stats over all n! permutations; independent of the sort-based
// planner path. n > 8 is refused.
OrderResult brute_force_order(prim::GroupKind kind, const std::vector<prim::Rated>& actions);

// ---------------------------------------------------------------------------
// Brute-force minimum-ratio path

struct PathResult {
    std::vector<int> path;  // empty if no path
    double T = graph::kInf;
    double P = 0.0;
};

// Enumerates all simple paths from s to g; refuses graphs above 7 nodes.
PathResult brute_force_min_ratio_path(const graph::AssetGraph& graph, int s, int g);

// ---------------------------------------------------------------------------
// Adaptive-policy expectimax over an attack tree

// Minimal expected cost over all adaptive execution policies, treating every
// action occurrence as an independent Bernoulli draw. Trees above 6 live
// actions are refused.
double expectimax_tree_value(const tree::AttackTree& tree);

// Minimal expected cost over all interleaved executions of ordered
// strategies: at every step any live group may advance by one action, a
// failure kills its group, the first completed group wins. Refuses more
// than 12 actions total.
double interleaving_min_value(const std::vector<std::vector<prim::Rated>>& groups);

// Minimal expected cost over all static contingency orderings of a tree
// (every per-node provider and requirement permutation), with dead
// providers pruned. This is the policy class the solver optimizes over;
// adaptive replanning can do better on deep trees.
double static_order_min_value(const tree::AttackTree& tree);

// ---------------------------------------------------------------------------
// Executable plan programs and Monte-Carlo simulation

// Nested execution program: OR groups stop at the first success, AND groups
// abort at the first failure. Children are listed in execution order.
struct SimNode {
    bool leaf = true;
    prim::GroupKind kind = prim::GroupKind::Or;
    double t = 0.0;
    double p = 1.0;
    std::vector<SimNode> children;

    static SimNode action(double t, double p);
    static SimNode group(prim::GroupKind kind, std::vector<SimNode> children);
};

// Expected (T, P) of a program, by the same group algebra the planner uses.
prim::SeqStats analytic_stats(const SimNode& program);

// The executable program of a solved tree (providers and requirements in
// their computed orders).
SimNode tree_program(const tree::AttackTree& tree, const tree::TreeSolution& solution);

struct MonteCarloResult {
    double mean_cost = 0.0;
    double cost_stderr = 0.0;
    double success_rate = 0.0;
    double success_stderr = 0.0;
    std::uint64_t trials = 0;
};

// Samples every action independently with its success probability and
// accumulates cost per the program semantics. Deterministic given the seed.
MonteCarloResult monte_carlo_plan(const SimNode& program, std::uint64_t seed, std::uint64_t trials);

// ---------------------------------------------------------------------------
// Seeded random instances (documented distribution: p uniform in
// [0.05, 1], t log-uniform in [0.1, 100])

prim::Rated random_rated(SplitMix64& rng, int id);
std::vector<prim::Rated> random_group(SplitMix64& rng, int min_n, int max_n);

// Random two-layer tree: an OR root over AND groups of leaf actions.
tree::AttackTree random_or_of_and_tree(SplitMix64& rng, int max_groups, int max_actions);

// Random tree with a third layer: some AND members are themselves OR groups.
tree::AttackTree random_nested_tree(SplitMix64& rng, int max_actions);

// Random labeled graph for path oracles.
graph::AssetGraph random_graph(SplitMix64& rng, int max_nodes);

// ---------------------------------------------------------------------------
// Planner-vs-oracle property suite (the `oracle check` command)

struct CheckReport {
    std::uint64_t cases = 0;
    std::uint64_t failures = 0;
};

using CheckLog = void (*)(const char* suite, const CheckReport& report);

// Runs every oracle-vs-planner property on `cases` seeded instances per
// suite; returns false on any mismatch.
bool run_oracle_checks(std::uint64_t seed, std::uint64_t cases, CheckLog log = nullptr);

}  // namespace aplan::oracle
