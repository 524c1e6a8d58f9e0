#pragma once

#include <cstddef>
#include <limits>
#include <unordered_map>
#include <vector>

#include "aplan/core.hpp"
#include "aplan/tree.hpp"

namespace aplan::graph {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// (Time, Prob) label of one directed pair; an unreachable pair is
// (+inf, 0) and prob is 0 iff time is infinite.
struct EdgeLabel {
    double time = kInf;
    double prob = 0.0;
    bool reachable() const { return prob > 0.0; }
};

// Second-level graph: one node per host (the distinguished agent assets),
// edges labeled with the pairwise attack-tree solutions.
struct AssetGraph {
    std::vector<HostId> nodes;
    std::unordered_map<HostId, int> index;
    std::vector<EdgeLabel> edges;  // M*M row-major, diagonal unused
    int source = 0;

    int size() const { return static_cast<int>(nodes.size()); }
    const EdgeLabel& edge(int i, int j) const { return edges[static_cast<std::size_t>(i) * nodes.size() + j]; }
    EdgeLabel& edge(int i, int j) { return edges[static_cast<std::size_t>(i) * nodes.size() + j]; }
    int node_index(const HostId& id) const;  // throws InputError
};

struct BuildStats {
    std::size_t edge_evaluations = 0;  // always M * (M - 1)
};

// Runs the first-level tree procedure for every ordered pair. The pairwise
// solves are independent; `threads` > 1 splits rows across workers with
// identical results.
AssetGraph build_asset_graph(const Scenario& scenario, BuildStats* stats = nullptr, int threads = 1);

// Single-source labels: T[v], P[v] and predecessor links.
struct PathLabels {
    std::vector<double> T;
    std::vector<double> P;
    std::vector<int> pred;
};

// Label-setting search ordered by minimal T/P; relaxation
//   T' = T[u] + P[u] * Time(u,v),  P' = P[u] * Prob(u,v)
// accepted when T'/P' improves. Ratios compared by cross-multiplication;
// a zero probability counts as an infinite ratio.
PathLabels modified_dijkstra(const AssetGraph& graph, int source);

// All-pairs matrices with next-hop reconstruction.
struct AllPairsLabels {
    std::vector<double> T;  // M*M
    std::vector<double> P;
    std::vector<int> next;
    int size = 0;

    double time(int i, int j) const { return T[static_cast<std::size_t>(i) * size + j]; }
    double prob(int i, int j) const { return P[static_cast<std::size_t>(i) * size + j]; }
};

AllPairsLabels modified_floyd_warshall(const AssetGraph& graph);

std::vector<int> reconstruct_path(const PathLabels& labels, int source, int goal);
std::vector<int> reconstruct_path(const AllPairsLabels& labels, int source, int goal);

enum class Algorithm { Dijkstra, FloydWarshall };

// End-to-end planning: builds the asset graph, finds the minimum-ratio
// path from the scenario source and concatenates the per-hop tree plans.
Plan plan_attack(const Scenario& scenario, const HostId& goal,
                 Algorithm algorithm = Algorithm::Dijkstra, BuildStats* stats = nullptr,
                 int threads = 1);

}  // namespace aplan::graph
