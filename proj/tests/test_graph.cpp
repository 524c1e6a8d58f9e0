#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aplan/graph.hpp"
#include "aplan/oracle.hpp"
#include "aplan/rng.hpp"
#include "aplan/scenario_io.hpp"

using namespace aplan;

namespace {

graph::AssetGraph triangle() {
    graph::AssetGraph g;
    g.nodes = {"s", "m", "g"};
    for (int i = 0; i < 3; ++i) g.index.emplace(g.nodes[i], i);
    g.edges.assign(9, graph::EdgeLabel{});
    g.source = 0;
    g.edge(0, 2) = {10.0, 0.5};
    g.edge(0, 1) = {2.0, 0.9};
    g.edge(1, 2) = {3.0, 0.9};
    return g;
}

Scenario triangle_scenario() {
    Scenario s;
    s.subnets = {"n1", "n2"};
    auto machine = [&s](const char* id, std::set<std::string> nets, std::set<Port> ports) {
        Machine m;
        m.id = id;
        m.os.name = "Windows";
        m.subnets = std::move(nets);
        m.open_tcp_ports = std::move(ports);
        m.value = 1.0;
        s.machines.push_back(std::move(m));
    };
    machine("s", {"n1"}, {});
    machine("m", {"n1", "n2"}, {80});
    machine("g", {"n1", "n2"}, {445});

    auto exploit = [&s](const char* id, const char* from, const char* target, Port port, double t,
                        double p) {
        Action e;
        e.id = id;
        e.name = id;
        e.kind = ActionKind::Exploit;
        e.t = t;
        e.p = p;
        e.requirements.push_back(agent_asset(from));
        e.requirements.push_back(tcp_connectivity_asset(from, target, port));
        e.result = agent_asset(target);
        s.exploits.push_back(std::move(e));
        s.known.push_back(tcp_connectivity_asset(from, target, port));
    };
    // direct attack on g: (10, 0.5); via m: (2, 0.9) then (3, 0.9)
    exploit("direct", "s", "g", 445, 10.0, 0.5);
    exploit("hop1", "s", "m", 80, 2.0, 0.9);
    exploit("hop2", "m", "g", 445, 3.0, 0.9);

    s.source = "s";
    s.goals.push_back(agent_asset("g"));
    return s;
}

}  // namespace

TEST_CASE("dijkstra solves the triangle instance") {
    graph::AssetGraph g = triangle();
    graph::PathLabels labels = graph::modified_dijkstra(g, 0);
    CHECK(labels.T[0] == 0.0);
    CHECK(labels.P[0] == 1.0);
    CHECK(labels.T[2] == doctest::Approx(4.7).epsilon(1e-12));
    CHECK(labels.P[2] == doctest::Approx(0.81).epsilon(1e-12));
    std::vector<int> path = graph::reconstruct_path(labels, 0, 2);
    CHECK(path == std::vector<int>{0, 1, 2});
}

TEST_CASE("floyd-warshall matches dijkstra on the triangle") {
    graph::AssetGraph g = triangle();
    graph::AllPairsLabels fw = graph::modified_floyd_warshall(g);
    CHECK(fw.time(0, 2) == doctest::Approx(4.7).epsilon(1e-12));
    CHECK(fw.prob(0, 2) == doctest::Approx(0.81).epsilon(1e-12));
    CHECK(graph::reconstruct_path(fw, 0, 2) == std::vector<int>{0, 1, 2});
}

TEST_CASE("single edge and unreachable labels") {
    graph::AssetGraph g;
    g.nodes = {"a", "b", "c"};
    for (int i = 0; i < 3; ++i) g.index.emplace(g.nodes[i], i);
    g.edges.assign(9, graph::EdgeLabel{});
    g.edge(0, 1) = {6.0, 0.5};
    graph::PathLabels labels = graph::modified_dijkstra(g, 0);
    CHECK(labels.T[1] == 6.0);
    CHECK(labels.P[1] == 0.5);
    CHECK(labels.P[2] == 0.0);
    CHECK(labels.T[2] == graph::kInf);
    CHECK(graph::reconstruct_path(labels, 0, 2).empty());
}

TEST_CASE("parallel edges pick the better ratio") {
    graph::AssetGraph g;
    g.nodes = {"a", "b"};
    g.index = {{"a", 0}, {"b", 1}};
    g.edges.assign(4, graph::EdgeLabel{});
    g.edge(0, 1) = {6.0, 0.5};  // the (10, 0.5) alternative loses before it is stored
    graph::PathLabels labels = graph::modified_dijkstra(g, 0);
    CHECK(labels.T[1] == 6.0);
}

TEST_CASE("relaxation never improves a label's ratio") {
    // (T + P t) / (P p) >= T / P whenever p <= 1; this is what makes the
    // label-setting order valid
    SplitMix64 rng(31);
    for (int i = 0; i < 2000; ++i) {
        double T = rng.uniform(0.0, 100.0);
        double P = rng.uniform(0.01, 1.0);
        double t = rng.uniform(0.0, 100.0);
        double p = rng.uniform(0.01, 1.0);
        CHECK_FALSE(prim::ratio_less(T + P * t, P * p, T, P));
    }
}

TEST_CASE("dijkstra ratio is optimal over simple paths") {
    SplitMix64 rng(17);
    for (int i = 0; i < 300; ++i) {
        graph::AssetGraph g = oracle::random_graph(rng, 6);
        graph::PathLabels labels = graph::modified_dijkstra(g, 0);
        for (int v = 1; v < g.size(); ++v) {
            oracle::PathResult best = oracle::brute_force_min_ratio_path(g, 0, v);
            if (best.P == 0.0) {
                CHECK(labels.P[v] == 0.0);
                continue;
            }
            double planner = labels.T[v] / labels.P[v];
            double brute = best.T / best.P;
            CHECK(planner == doctest::Approx(brute).epsilon(1e-9));
        }
    }
}

TEST_CASE("floyd-warshall labels are sound and usually optimal") {
    // The matrix recurrence composes two stored labels, and a min-ratio
    // (k,j) label can displace the higher-probability one a particular
    // (i,j) query needs, so Floyd-Warshall can settle above the optimum
    // on adversarial graphs. It must never beat Dijkstra, and both must
    // agree on reachability.
    SplitMix64 rng(23);
    int disagreements = 0;
    for (int i = 0; i < 200; ++i) {
        graph::AssetGraph g = oracle::random_graph(rng, 6);
        graph::PathLabels dj = graph::modified_dijkstra(g, 0);
        graph::AllPairsLabels fw = graph::modified_floyd_warshall(g);
        for (int v = 0; v < g.size(); ++v) {
            CHECK((dj.P[v] == 0.0) == (fw.prob(0, v) == 0.0));
            if (dj.P[v] == 0.0 || fw.prob(0, v) == 0.0) continue;
            double dj_ratio = dj.T[v] / dj.P[v];
            double fw_ratio = fw.time(0, v) / fw.prob(0, v);
            CHECK(fw_ratio >= dj_ratio - 1e-9 * std::max(1.0, dj_ratio));
            if (fw_ratio > dj_ratio + 1e-9 * std::max(1.0, dj_ratio)) ++disagreements;
        }
    }
    // the displacement is the exception, not the rule
    CHECK(disagreements < 40);
}

TEST_CASE("asset graph from a scenario") {
    Scenario s = triangle_scenario();
    graph::BuildStats stats;
    graph::AssetGraph g = graph::build_asset_graph(s, &stats);
    CHECK(stats.edge_evaluations == 6);  // M * (M - 1)
    CHECK(g.edge(0, 2).time == doctest::Approx(10.0));
    CHECK(g.edge(0, 2).prob == doctest::Approx(0.5));
    CHECK(g.edge(0, 1).time == doctest::Approx(2.0));
    CHECK(g.edge(1, 2).time == doctest::Approx(3.0));
    // threaded evaluation gives identical labels
    graph::AssetGraph g4 = graph::build_asset_graph(s, nullptr, 4);
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g.size(); ++j) {
            CHECK(g.edge(i, j).time == g4.edge(i, j).time);
            CHECK(g.edge(i, j).prob == g4.edge(i, j).prob);
        }
    }
}

TEST_CASE("plan_attack concatenates hop plans") {
    Scenario s = triangle_scenario();
    Plan plan = graph::plan_attack(s, "g");
    CHECK(plan.feasible());
    CHECK(plan.expected_cost == doctest::Approx(4.7).epsilon(1e-12));
    CHECK(plan.success_prob == doctest::Approx(0.81).epsilon(1e-12));
    REQUIRE(plan.hops.size() == 2);
    CHECK(plan.hops[0].source == "s");
    CHECK(plan.hops[0].target == "m");
    CHECK(plan.hops[1].target == "g");
    REQUIRE(plan.steps.size() == 2);
    CHECK(plan.steps[0].action_id == "hop1");
    CHECK(plan.steps[1].action_id == "hop2");

    // self-consistency: recomputing totals from hops reproduces them
    double T = plan.expected_cost;
    double P = plan.success_prob;
    plan.recompute_totals();
    CHECK(plan.expected_cost == doctest::Approx(T).epsilon(1e-12));
    CHECK(plan.success_prob == doctest::Approx(P).epsilon(1e-12));
}

TEST_CASE("plan to source is empty and unreachable goals are flagged") {
    Scenario s = triangle_scenario();
    Plan self = graph::plan_attack(s, "s");
    CHECK(self.steps.empty());
    CHECK(self.expected_cost == 0.0);
    CHECK(self.success_prob == 1.0);

    s.subnets.push_back("void");
    Machine island;
    island.id = "island";
    island.os.name = "Linux";
    island.subnets = {"void"};
    s.machines.push_back(island);
    Plan missing = graph::plan_attack(s, "island");
    CHECK_FALSE(missing.feasible());
    CHECK(missing.success_prob == 0.0);
}

TEST_CASE("floyd algorithm flag produces the same plan") {
    Scenario s = triangle_scenario();
    Plan dj = graph::plan_attack(s, "g", graph::Algorithm::Dijkstra);
    Plan fw = graph::plan_attack(s, "g", graph::Algorithm::FloydWarshall);
    CHECK(dj.expected_cost == doctest::Approx(fw.expected_cost).epsilon(1e-12));
    CHECK(dj.success_prob == doctest::Approx(fw.success_prob).epsilon(1e-12));
    REQUIRE(dj.steps.size() == fw.steps.size());
    for (std::size_t i = 0; i < dj.steps.size(); ++i) {
        CHECK(dj.steps[i].action_id == fw.steps[i].action_id);
    }
}

TEST_CASE("plan serialization") {
    Scenario s = triangle_scenario();
    Plan plan = graph::plan_attack(s, "g");
    std::string json = io::plan_to_json(plan);
    CHECK(json.find("\"expected-cost\": 4.7") != std::string::npos);
    CHECK(json.find("\"success-probability\": 0.81") != std::string::npos);
    std::string text = io::plan_to_text(plan);
    CHECK(text.find(" 0: hop1 s m") != std::string::npos);
    CHECK(text.find(" 1: hop2 m g") != std::string::npos);
}
