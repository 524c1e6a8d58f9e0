#include "aplan/graph.hpp"

#include <algorithm>
#include <cassert>
#include <thread>

#include "aplan/primitives.hpp"

namespace aplan::graph {

int AssetGraph::node_index(const HostId& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw InputError("unknown host id: " + id);
    return it->second;
}

AssetGraph build_asset_graph(const Scenario& scenario, BuildStats* stats, int threads) {
    AssetGraph graph;
    graph.nodes.reserve(scenario.machines.size());
    for (const Machine& m : scenario.machines) {
        graph.index.emplace(m.id, static_cast<int>(graph.nodes.size()));
        graph.nodes.push_back(m.id);
    }
    const int M = graph.size();
    graph.edges.assign(static_cast<std::size_t>(M) * M, EdgeLabel{});
    graph.source = graph.node_index(scenario.source);

    const tree::PlanningContext context = tree::PlanningContext::build(scenario);
    auto evaluate_rows = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            for (int j = 0; j < M; ++j) {
                if (i == j) continue;
                tree::AttackTree t =
                    tree::build_attack_tree(context, graph.nodes[i], graph.nodes[j]);
                prim::SeqStats s = tree::solve_tree(t).stats;
                graph.edge(i, j) = s.P > 0.0 ? EdgeLabel{s.T, s.P} : EdgeLabel{};
            }
        }
    };

    if (threads <= 1 || M < 4) {
        evaluate_rows(0, M);
    } else {
        int workers = std::min(threads, M);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            int begin = M * w / workers;
            int end = M * (w + 1) / workers;
            pool.emplace_back(evaluate_rows, begin, end);
        }
        for (std::thread& worker : pool) worker.join();
    }

    if (stats != nullptr) {
        stats->edge_evaluations += static_cast<std::size_t>(M) * (M - 1);
    }
    return graph;
}

PathLabels modified_dijkstra(const AssetGraph& graph, int source) {
    const int M = graph.size();
    PathLabels labels;
    labels.T.assign(M, kInf);
    labels.P.assign(M, 0.0);
    labels.pred.assign(M, -1);
    labels.T[source] = 0.0;
    labels.P[source] = 1.0;

    std::vector<bool> settled(M, false);
    for (int round = 0; round < M; ++round) {
        int u = -1;
        for (int x = 0; x < M; ++x) {
            if (settled[x]) continue;
            if (u == -1 || prim::ratio_less(labels.T[x], labels.P[x], labels.T[u], labels.P[u])) u = x;
        }
        if (u == -1 || labels.P[u] == 0.0) break;  // the rest is unreachable
        settled[u] = true;
        for (int v = 0; v < M; ++v) {
            if (settled[v] || v == u) continue;
            const EdgeLabel& e = graph.edge(u, v);
            if (!e.reachable()) continue;
            double T2 = labels.T[u] + labels.P[u] * e.time;
            double P2 = labels.P[u] * e.prob;
            // relaxations never improve on the settled label
            assert(!prim::ratio_less(T2, P2, labels.T[u], labels.P[u]));
            if (prim::ratio_less(T2, P2, labels.T[v], labels.P[v])) {
                labels.T[v] = T2;
                labels.P[v] = P2;
                labels.pred[v] = u;
            }
        }
    }
    return labels;
}

AllPairsLabels modified_floyd_warshall(const AssetGraph& graph) {
    const int M = graph.size();
    AllPairsLabels labels;
    labels.size = M;
    labels.T.assign(static_cast<std::size_t>(M) * M, kInf);
    labels.P.assign(static_cast<std::size_t>(M) * M, 0.0);
    labels.next.assign(static_cast<std::size_t>(M) * M, -1);

    auto at = [M](int i, int j) { return static_cast<std::size_t>(i) * M + j; };
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < M; ++j) {
            if (i == j) {
                labels.T[at(i, j)] = 0.0;
                labels.P[at(i, j)] = 1.0;
                labels.next[at(i, j)] = j;
            } else if (const EdgeLabel& e = graph.edge(i, j); e.reachable()) {
                labels.T[at(i, j)] = e.time;
                labels.P[at(i, j)] = e.prob;
                labels.next[at(i, j)] = j;
            }
        }
    }

    for (int k = 0; k < M; ++k) {
        for (int i = 0; i < M; ++i) {
            if (labels.P[at(i, k)] == 0.0) continue;
            for (int j = 0; j < M; ++j) {
                if (labels.P[at(k, j)] == 0.0) continue;
                double T2 = labels.T[at(i, k)] + labels.P[at(i, k)] * labels.T[at(k, j)];
                double P2 = labels.P[at(i, k)] * labels.P[at(k, j)];
                if (prim::ratio_less(T2, P2, labels.T[at(i, j)], labels.P[at(i, j)])) {
                    labels.T[at(i, j)] = T2;
                    labels.P[at(i, j)] = P2;
                    labels.next[at(i, j)] = labels.next[at(i, k)];
                }
            }
        }
    }
    return labels;
}

std::vector<int> reconstruct_path(const PathLabels& labels, int source, int goal) {
    std::vector<int> path;
    if (labels.P[goal] == 0.0) return path;
    for (int v = goal; v != -1; v = labels.pred[v]) {
        path.push_back(v);
        if (v == source) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> reconstruct_path(const AllPairsLabels& labels, int source, int goal) {
    std::vector<int> path;
    if (labels.prob(source, goal) == 0.0) return path;
    int v = source;
    path.push_back(v);
    while (v != goal) {
        v = labels.next[static_cast<std::size_t>(v) * labels.size + goal];
        path.push_back(v);
    }
    return path;
}

Plan plan_attack(const Scenario& scenario, const HostId& goal, Algorithm algorithm,
                 BuildStats* stats, int threads) {
    scenario.at(goal);
    Plan plan;
    if (goal == scenario.source) return plan;  // already held: empty plan, (0, 1)

    AssetGraph graph = build_asset_graph(scenario, stats, threads);
    int src = graph.source;
    int dst = graph.node_index(goal);

    std::vector<int> path;
    if (algorithm == Algorithm::Dijkstra) {
        path = reconstruct_path(modified_dijkstra(graph, src), src, dst);
    } else {
        path = reconstruct_path(modified_floyd_warshall(graph), src, dst);
    }
    if (path.empty()) {
        plan.success_prob = 0.0;
        plan.status = "goal unreachable from " + scenario.source;
        return plan;
    }

    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const HostId& from = graph.nodes[path[k]];
        const HostId& to = graph.nodes[path[k + 1]];
        tree::AttackTree t = tree::build_attack_tree(scenario, from, to);
        tree::TreeSolution sol = tree::solve_tree(t);
        std::vector<PlanStep> steps = tree::plan_steps(t, sol);
        PlanHop hop;
        hop.source = from;
        hop.target = to;
        hop.time = sol.stats.T;
        hop.prob = sol.stats.P;
        hop.first_step = plan.steps.size();
        hop.step_count = steps.size();
        plan.hops.push_back(std::move(hop));
        plan.steps.insert(plan.steps.end(), steps.begin(), steps.end());
    }
    plan.recompute_totals();
    return plan;
}

}  // namespace aplan::graph
