#include "aplan/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>

namespace aplan::oracle {

OrderResult brute_force_order(prim::GroupKind kind, const std::vector<prim::Rated>& actions) {
    const std::size_t n = actions.size();
    if (n > 8) throw GuardError("brute_force_order: more than 8 actions");
    prim::validate(actions);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    OrderResult best;
    best.T = graph::kInf;
    std::vector<prim::Rated> ordered(n);
    do {
        for (std::size_t i = 0; i < n; ++i) ordered[i] = actions[perm[i]];
        prim::SeqStats stats =
            kind == prim::GroupKind::Or ? prim::seq_stats_or(ordered) : prim::seq_stats_and(ordered);
        if (stats.T < best.T) {
            best.T = stats.T;
            best.order = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (n == 0) best.T = 0.0;
    return best;
}

PathResult brute_force_min_ratio_path(const graph::AssetGraph& graph, int s, int g) {
    if (graph.size() > 7) throw GuardError("brute_force_min_ratio_path: more than 7 nodes");
    PathResult best;
    std::vector<int> current{s};
    std::vector<bool> visited(graph.size(), false);
    visited[s] = true;

    auto dfs = [&](auto&& self, int u, double T, double P) -> void {
        if (u == g) {
            if (prim::ratio_less(T, P, best.T, best.P)) {
                best.T = T;
                best.P = P;
                best.path = current;
            }
            return;
        }
        for (int v = 0; v < graph.size(); ++v) {
            if (visited[v] || v == u) continue;
            const graph::EdgeLabel& e = graph.edge(u, v);
            if (!e.reachable()) continue;
            visited[v] = true;
            current.push_back(v);
            self(self, v, T + P * e.time, P * e.prob);
            current.pop_back();
            visited[v] = false;
        }
    };
    if (s == g) {
        best = {{s}, 0.0, 1.0};
    } else {
        dfs(dfs, s, 0.0, 1.0);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Expectimax over adaptive policies

namespace {

struct Expectimax {
    const tree::AttackTree& tree;
    std::vector<int> slot;  // action node -> live-action slot, or -1
    std::vector<int> live;  // slot -> action node
    std::vector<double> memo;

    explicit Expectimax(const tree::AttackTree& t) : tree(t), slot(t.actions.size(), -1) {
        for (std::size_t a = 0; a < t.actions.size(); ++a) {
            if (!t.actions[a].fact && !t.actions[a].removed) {
                slot[a] = static_cast<int>(live.size());
                live.push_back(static_cast<int>(a));
            }
        }
        if (live.size() > 6) throw GuardError("expectimax_tree_value: more than 6 actions");
        memo.assign(std::size_t{1} << (2 * live.size()), std::numeric_limits<double>::quiet_NaN());
    }

    // status per live action: 0 pending, 1 succeeded, 2 failed
    static int status(unsigned state, int s) { return (state >> (2 * s)) & 3u; }
    static unsigned with_status(unsigned state, int s, int value) {
        return (state & ~(3u << (2 * s))) | (unsigned(value) << (2 * s));
    }

    bool action_succeeded(unsigned state, int a) const {
        const tree::ActionNode& node = tree.actions[a];
        if (node.fact) return true;
        if (node.removed) return false;
        return status(state, slot[a]) == 1;
    }

    bool asset_satisfied(unsigned state, int i) const {
        const tree::AssetNode& node = tree.assets[i];
        if (node.known) return true;
        for (int a : node.providers) {
            if (action_succeeded(state, a)) return true;
        }
        return false;
    }

    bool action_dead(unsigned state, int a) const {
        const tree::ActionNode& node = tree.actions[a];
        if (node.fact) return false;
        if (node.removed) return true;
        if (status(state, slot[a]) == 2) return true;
        for (int r : node.requirements) {
            if (asset_dead(state, r)) return true;
        }
        return false;
    }

    bool asset_dead(unsigned state, int i) const {
        const tree::AssetNode& node = tree.assets[i];
        if (node.known) return false;
        if (asset_satisfied(state, i)) return false;
        for (int a : node.providers) {
            if (!action_dead(state, a)) return false;
        }
        return true;
    }

    bool executable(unsigned state, int a) const {
        const tree::ActionNode& node = tree.actions[a];
        if (node.fact || node.removed || status(state, slot[a]) != 0) return false;
        for (int r : node.requirements) {
            if (!asset_satisfied(state, r)) return false;
        }
        return true;
    }

    double value(unsigned state) {
        if (!std::isnan(memo[state])) return memo[state];
        double result = 0.0;
        if (!asset_satisfied(state, tree.root) && !asset_dead(state, tree.root)) {
            result = graph::kInf;
            for (int a : live) {
                if (!executable(state, a)) continue;
                const tree::ActionNode& node = tree.actions[a];
                int s = slot[a];
                double v = node.t + node.p * value(with_status(state, s, 1)) +
                           (1.0 - node.p) * value(with_status(state, s, 2));
                result = std::min(result, v);
            }
            if (result == graph::kInf) result = 0.0;
        }
        memo[state] = result;
        return result;
    }
};

}  // namespace

double expectimax_tree_value(const tree::AttackTree& tree) {
    Expectimax solver(tree);
    return solver.value(0);
}

double interleaving_min_value(const std::vector<std::vector<prim::Rated>>& groups) {
    std::size_t total = 0;
    for (const auto& g : groups) {
        prim::validate(g);
        if (g.empty()) throw InputError("interleaving_min_value: empty strategy");
        total += g.size();
    }
    if (total > 12) throw GuardError("interleaving_min_value: more than 12 actions");

    // state: per group the next action index, or len+1 once the group died
    std::vector<int> radix;
    std::size_t states = 1;
    for (const auto& g : groups) {
        radix.push_back(static_cast<int>(g.size()) + 2);
        states *= radix.back();
    }
    std::vector<double> memo(states, std::numeric_limits<double>::quiet_NaN());

    auto value = [&](auto&& self, std::size_t state) -> double {
        if (!std::isnan(memo[state])) return memo[state];
        std::vector<int> position(groups.size());
        std::size_t rest = state;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            position[g] = static_cast<int>(rest % radix[g]);
            rest /= radix[g];
        }
        bool any_alive = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            int len = static_cast<int>(groups[g].size());
            if (position[g] == len) {
                memo[state] = 0.0;  // a strategy completed: goal reached
                return 0.0;
            }
            if (position[g] < len) any_alive = true;
        }
        if (!any_alive) {
            memo[state] = 0.0;  // everything failed, nothing left to spend
            return 0.0;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            int len = static_cast<int>(groups[g].size());
            if (position[g] >= len) continue;
            const prim::Rated& next = groups[g][position[g]];
            std::size_t stride = 1;
            for (std::size_t k = 0; k < g; ++k) stride *= radix[k];
            std::size_t advanced = state + stride;             // next action done
            std::size_t dead = state + stride * (len + 1 - position[g]);
            double v = next.t + next.p * self(self, advanced) +
                       (1.0 - next.p) * self(self, dead);
            best = std::min(best, v);
        }
        memo[state] = best;
        return best;
    };
    return value(value, 0);
}

namespace {

struct StaticOrderEnumerator {
    const tree::AttackTree& tree;
    std::vector<std::vector<std::vector<int>>> asset_perms;
    std::vector<std::vector<std::vector<int>>> action_perms;
    std::vector<std::size_t> asset_choice;
    std::vector<std::size_t> action_choice;

    explicit StaticOrderEnumerator(const tree::AttackTree& t) : tree(t) {
        asset_perms.resize(t.assets.size());
        action_perms.resize(t.actions.size());
        double configurations = 1.0;
        for (std::size_t i = 0; i < t.assets.size(); ++i) {
            std::vector<int> providers;
            for (int a : t.assets[i].providers) {
                if (!t.actions[a].removed) providers.push_back(a);
            }
            std::sort(providers.begin(), providers.end());
            do {
                asset_perms[i].push_back(providers);
            } while (std::next_permutation(providers.begin(), providers.end()));
            configurations *= static_cast<double>(asset_perms[i].size());
        }
        for (std::size_t a = 0; a < t.actions.size(); ++a) {
            std::vector<int> reqs = t.actions[a].requirements;
            std::sort(reqs.begin(), reqs.end());
            do {
                action_perms[a].push_back(reqs);
            } while (std::next_permutation(reqs.begin(), reqs.end()));
            configurations *= static_cast<double>(action_perms[a].size());
        }
        if (configurations > 1e6) {
            throw GuardError("static_order_min_value: too many orderings");
        }
        asset_choice.assign(t.assets.size(), 0);
        action_choice.assign(t.actions.size(), 0);
    }

    prim::SeqStats eval_asset(int i) const {
        if (tree.assets[i].known) return {0.0, 1.0};
        double T = 0.0;
        double reach = 1.0;
        bool any = false;
        for (int a : asset_perms[i][asset_choice[i]]) {
            prim::SeqStats group = eval_action(a);
            if (group.P == 0.0) continue;  // dead providers are pruned
            any = true;
            T += reach * group.T;
            reach *= 1.0 - group.P;
        }
        return {T, any ? 1.0 - reach : 0.0};
    }

    prim::SeqStats eval_action(int a) const {
        double T = 0.0;
        double alive = 1.0;
        for (int r : action_perms[a][action_choice[a]]) {
            prim::SeqStats req = eval_asset(r);
            T += alive * req.T;
            alive *= req.P;
        }
        T += alive * tree.actions[a].t;
        alive *= tree.actions[a].p;
        return {T, alive};
    }

    bool advance() {
        for (std::size_t i = 0; i < asset_choice.size(); ++i) {
            if (++asset_choice[i] < asset_perms[i].size()) return true;
            asset_choice[i] = 0;
        }
        for (std::size_t a = 0; a < action_choice.size(); ++a) {
            if (++action_choice[a] < action_perms[a].size()) return true;
            action_choice[a] = 0;
        }
        return false;
    }
};

}  // namespace

double static_order_min_value(const tree::AttackTree& tree) {
    StaticOrderEnumerator enumerator(tree);
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, enumerator.eval_asset(tree.root).T);
    } while (enumerator.advance());
    return best;
}

// ---------------------------------------------------------------------------
// Programs and Monte-Carlo

SimNode SimNode::action(double t, double p) {
    SimNode node;
    node.leaf = true;
    node.t = t;
    node.p = p;
    return node;
}

SimNode SimNode::group(prim::GroupKind kind, std::vector<SimNode> children) {
    SimNode node;
    node.leaf = false;
    node.kind = kind;
    node.children = std::move(children);
    return node;
}

prim::SeqStats analytic_stats(const SimNode& program) {
    if (program.leaf) return {program.t, program.p};
    std::vector<prim::Rated> rated;
    rated.reserve(program.children.size());
    int id = 0;
    for (const SimNode& child : program.children) {
        prim::SeqStats stats = analytic_stats(child);
        rated.push_back({stats.T, stats.P, id++});
    }
    return program.kind == prim::GroupKind::Or ? prim::seq_stats_or(rated) : prim::seq_stats_and(rated);
}

namespace {

SimNode asset_program(const tree::AttackTree& tree, const tree::TreeSolution& sol, int i);

SimNode action_program(const tree::AttackTree& tree, const tree::TreeSolution& sol, int a) {
    const tree::ActionNode& node = tree.actions[a];
    if (node.fact) return SimNode::action(0.0, 1.0);
    std::vector<SimNode> children;
    children.reserve(sol.requirement_order[a].size() + 1);
    for (int r : sol.requirement_order[a]) children.push_back(asset_program(tree, sol, r));
    children.push_back(SimNode::action(node.t, node.p));
    return SimNode::group(prim::GroupKind::And, std::move(children));
}

SimNode asset_program(const tree::AttackTree& tree, const tree::TreeSolution& sol, int i) {
    if (tree.assets[i].known) return SimNode::action(0.0, 1.0);
    std::vector<SimNode> children;
    children.reserve(sol.provider_order[i].size());
    for (int a : sol.provider_order[i]) children.push_back(action_program(tree, sol, a));
    return SimNode::group(prim::GroupKind::Or, std::move(children));
}

struct SimOutcome {
    double cost = 0.0;
    bool success = false;
};

SimOutcome run_program(const SimNode& node, SplitMix64& rng) {
    SimOutcome outcome;
    if (node.leaf) {
        outcome.cost = node.t;
        // the exploit-outcome rule: draw a value in [0,1), succeed if it
        // falls below the success probability
        outcome.success = rng.next_double() < node.p;
        return outcome;
    }
    if (node.kind == prim::GroupKind::Or) {
        for (const SimNode& child : node.children) {
            SimOutcome r = run_program(child, rng);
            outcome.cost += r.cost;
            if (r.success) {
                outcome.success = true;
                return outcome;
            }
        }
        return outcome;  // all alternatives failed
    }
    outcome.success = true;
    for (const SimNode& child : node.children) {
        SimOutcome r = run_program(child, rng);
        outcome.cost += r.cost;
        if (!r.success) {
            outcome.success = false;
            return outcome;  // a required step failed
        }
    }
    return outcome;
}

}  // namespace

SimNode tree_program(const tree::AttackTree& tree, const tree::TreeSolution& solution) {
    return asset_program(tree, solution, tree.root);
}

MonteCarloResult monte_carlo_plan(const SimNode& program, std::uint64_t seed, std::uint64_t trials) {
    if (trials == 0) throw InputError("monte_carlo_plan: trials must be >= 1");
    SplitMix64 rng = SplitMix64::substream(seed, 0);
    double cost_sum = 0.0;
    double cost_sq_sum = 0.0;
    std::uint64_t successes = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        SimOutcome outcome = run_program(program, rng);
        cost_sum += outcome.cost;
        cost_sq_sum += outcome.cost * outcome.cost;
        if (outcome.success) ++successes;
    }
    MonteCarloResult result;
    result.trials = trials;
    result.mean_cost = cost_sum / static_cast<double>(trials);
    double variance = std::max(0.0, cost_sq_sum / static_cast<double>(trials) -
                                        result.mean_cost * result.mean_cost);
    result.cost_stderr = std::sqrt(variance / static_cast<double>(trials));
    result.success_rate = static_cast<double>(successes) / static_cast<double>(trials);
    result.success_stderr =
        std::sqrt(result.success_rate * (1.0 - result.success_rate) / static_cast<double>(trials));
    return result;
}

// ---------------------------------------------------------------------------
// Random instances

prim::Rated random_rated(SplitMix64& rng, int id) {
    prim::Rated r;
    r.p = rng.uniform(0.05, 1.0);
    r.t = std::exp(rng.uniform(std::log(0.1), std::log(100.0)));
    r.id = id;
    return r;
}

std::vector<prim::Rated> random_group(SplitMix64& rng, int min_n, int max_n) {
    int n = min_n + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_n - min_n + 1)));
    std::vector<prim::Rated> group;
    group.reserve(n);
    for (int i = 0; i < n; ++i) group.push_back(random_rated(rng, i));
    return group;
}

namespace {

int add_leaf_action(tree::AttackTree& t, int parent_asset, SplitMix64& rng) {
    tree::ActionNode node;
    node.kind = ActionKind::Plumbing;
    prim::Rated r = random_rated(rng, 0);
    node.t = r.t;
    node.p = r.p;
    node.parent_asset = parent_asset;
    t.actions.push_back(node);
    int idx = static_cast<int>(t.actions.size()) - 1;
    t.assets[parent_asset].providers.push_back(idx);
    return idx;
}

int add_asset(tree::AttackTree& t, AssetKind kind) {
    Asset asset;
    asset.kind = kind;
    asset.host = t.target;
    t.assets.push_back(tree::AssetNode{std::move(asset), {}, false});
    return static_cast<int>(t.assets.size()) - 1;
}

tree::AttackTree empty_tree() {
    tree::AttackTree t;
    t.source = "s";
    t.target = "t";
    t.assets.push_back(tree::AssetNode{agent_asset("t"), {}, false});
    t.root = 0;
    return t;
}

}  // namespace

tree::AttackTree random_or_of_and_tree(SplitMix64& rng, int max_groups, int max_actions) {
    tree::AttackTree t = empty_tree();
    int groups = 1 + static_cast<int>(rng.next_below(max_groups));
    for (int g = 0; g < groups; ++g) {
        int top = add_leaf_action(t, t.root, rng);
        int members = 1 + static_cast<int>(rng.next_below(max_actions));
        for (int m = 1; m < members; ++m) {
            int req = add_asset(t, AssetKind::OsKnowledge);
            add_leaf_action(t, req, rng);
            t.actions[top].requirements.push_back(req);
        }
    }
    return t;
}

tree::AttackTree random_nested_tree(SplitMix64& rng, int max_actions) {
    tree::AttackTree t = empty_tree();
    int budget = 1 + static_cast<int>(rng.next_below(max_actions));
    int used = 0;
    while (used < budget) {
        int top = add_leaf_action(t, t.root, rng);
        ++used;
        int reqs = static_cast<int>(rng.next_below(3));
        for (int r = 0; r < reqs && used < budget; ++r) {
            int req = add_asset(t, AssetKind::OsKnowledge);
            t.actions[top].requirements.push_back(req);
            int providers = 1 + static_cast<int>(rng.next_below(2));
            for (int p = 0; p < providers && used < budget; ++p) {
                add_leaf_action(t, req, rng);
                ++used;
            }
            if (t.assets[req].providers.empty()) {
                add_leaf_action(t, req, rng);
                ++used;
            }
        }
    }
    return t;
}

graph::AssetGraph random_graph(SplitMix64& rng, int max_nodes) {
    graph::AssetGraph g;
    int n = 2 + static_cast<int>(rng.next_below(std::max(1, max_nodes - 1)));
    for (int i = 0; i < n; ++i) {
        HostId id = "h" + std::to_string(i);
        g.index.emplace(id, i);
        g.nodes.push_back(std::move(id));
    }
    g.edges.assign(static_cast<std::size_t>(n) * n, graph::EdgeLabel{});
    g.source = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (rng.next_double() < 0.6) {
                prim::Rated r = random_rated(rng, 0);
                g.edge(i, j) = graph::EdgeLabel{r.t, r.p};
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// The oracle-vs-planner suite

namespace {

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

double ratio_of(double T, double P) { return P > 0.0 ? T / P : graph::kInf; }

}  // namespace

bool run_oracle_checks(std::uint64_t seed, std::uint64_t cases, CheckLog log) {
    struct Suite {
        const char* name;
        bool (*check)(SplitMix64&);
    };

    static const Suite suites[] = {
        {"or-order-optimality",
         [](SplitMix64& rng) {
             std::vector<prim::Rated> group = random_group(rng, 1, 8);
             double planner = prim::seq_stats_or(prim::choose_order(group)).T;
             return close(planner, brute_force_order(prim::GroupKind::Or, group).T, 1e-9);
         }},
        {"and-order-optimality",
         [](SplitMix64& rng) {
             std::vector<prim::Rated> group = random_group(rng, 1, 8);
             double planner = prim::seq_stats_and(prim::and_order(group).order).T;
             return close(planner, brute_force_order(prim::GroupKind::And, group).T, 1e-9);
         }},
        {"or-probability-invariance",
         [](SplitMix64& rng) {
             std::vector<prim::Rated> group = random_group(rng, 1, 8);
             double reference = prim::seq_stats_or(group).P;
             for (int k = 0; k < 10; ++k) {
                 for (std::size_t i = group.size(); i > 1; --i) {
                     std::swap(group[i - 1], group[rng.next_below(i)]);
                 }
                 if (std::abs(prim::seq_stats_or(group).P - reference) > 1e-12) return false;
             }
             return true;
         }},
        {"no-interleaving",
         [](SplitMix64& rng) {
             std::vector<std::vector<prim::Rated>> groups;
             int n = 1 + static_cast<int>(rng.next_below(3));
             for (int g = 0; g < n; ++g) groups.push_back(random_group(rng, 1, 3));
             std::vector<prim::Rated> rated;
             for (std::size_t g = 0; g < groups.size(); ++g) {
                 prim::SeqStats stats = prim::seq_stats_and(groups[g]);
                 rated.push_back({stats.T, stats.P, static_cast<int>(g)});
             }
             double planner = prim::seq_stats_or(prim::choose_order(rated)).T;
             return close(planner, interleaving_min_value(groups), 1e-9);
         }},
        {"tree-two-layer-adaptive",
         [](SplitMix64& rng) {
             tree::AttackTree t = random_or_of_and_tree(rng, 3, 2);
             return close(tree::solve_tree(t).stats.T, expectimax_tree_value(t), 1e-9);
         }},
        {"tree-static-orderings",
         [](SplitMix64& rng) {
             tree::AttackTree t = random_nested_tree(rng, 6);
             double planner = tree::solve_tree(t).stats.T;
             if (!close(planner, static_order_min_value(t), 1e-9)) return false;
             // adaptive replanning may beat the static plan, never the reverse
             return planner >= expectimax_tree_value(t) - 1e-9;
         }},
        {"path-ratio-optimality",
         [](SplitMix64& rng) {
             graph::AssetGraph g = random_graph(rng, 6);
             graph::PathLabels labels = graph::modified_dijkstra(g, 0);
             for (int v = 1; v < g.size(); ++v) {
                 PathResult oracle = brute_force_min_ratio_path(g, 0, v);
                 double lhs = ratio_of(labels.T[v], labels.P[v]);
                 double rhs = ratio_of(oracle.T, oracle.P);
                 if (lhs == graph::kInf && rhs == graph::kInf) continue;
                 if (!close(lhs, rhs, 1e-9)) return false;
             }
             return true;
         }},
        {"floyd-warshall-soundness",
         [](SplitMix64& rng) {
             graph::AssetGraph g = random_graph(rng, 6);
             graph::PathLabels dj = graph::modified_dijkstra(g, 0);
             graph::AllPairsLabels fw = graph::modified_floyd_warshall(g);
             for (int v = 0; v < g.size(); ++v) {
                 double lhs = ratio_of(dj.T[v], dj.P[v]);
                 double rhs = ratio_of(fw.time(0, v), fw.prob(0, v));
                 if ((lhs == graph::kInf) != (rhs == graph::kInf)) return false;
                 if (lhs == graph::kInf) continue;
                 // Floyd-Warshall labels are realizable paths, never better
                 // than the exact single-source optimum
                 if (rhs < lhs - 1e-9 * std::max(1.0, lhs)) return false;
             }
             return true;
         }},
        {"monte-carlo",
         [](SplitMix64& rng) {
             tree::AttackTree t = random_nested_tree(rng, 6);
             SimNode program = tree_program(t, tree::solve_tree(t));
             prim::SeqStats analytic = analytic_stats(program);
             MonteCarloResult mc = monte_carlo_plan(program, rng.next_u64(), 100000);
             double cost_buffer = 4.0 * mc.cost_stderr + 1e-9 * std::max(1.0, analytic.T);
             double rate_buffer = 4.0 * mc.success_stderr + 1e-9;
             return std::abs(mc.mean_cost - analytic.T) <= cost_buffer &&
                    std::abs(mc.success_rate - analytic.P) <= rate_buffer;
         }},
    };

    bool ok = true;
    std::uint64_t suite_index = 0;
    for (const Suite& suite : suites) {
        CheckReport report;
        std::uint64_t mc_cases = std::string_view(suite.name) == "monte-carlo"
                                     ? std::min<std::uint64_t>(cases, 50)
                                     : cases;
        for (std::uint64_t c = 0; c < mc_cases; ++c) {
            SplitMix64 rng = SplitMix64::substream(seed + suite_index * 0x100000001ull, c);
            ++report.cases;
            if (!suite.check(rng)) ++report.failures;
        }
        if (log != nullptr) log(suite.name, report);
        if (report.failures > 0) ok = false;
        ++suite_index;
    }
    return ok;
}

}  // namespace aplan::oracle
