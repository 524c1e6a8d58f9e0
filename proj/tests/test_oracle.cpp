#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aplan/oracle.hpp"
#include "aplan/rng.hpp"

using namespace aplan;
using oracle::SimNode;

TEST_CASE("brute force order evaluates every permutation") {
    std::vector<prim::Rated> or_group = {{4, 0.8, 0}, {10, 0.5, 1}, {1, 0.1, 2}};
    oracle::OrderResult best = oracle::brute_force_order(prim::GroupKind::Or, or_group);
    CHECK(best.T == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(best.order == std::vector<int>{0, 2, 1});

    std::vector<prim::Rated> and_group = {{1, 0.2, 0}, {5, 0.95, 1}, {2, 0.5, 2}};
    best = oracle::brute_force_order(prim::GroupKind::And, and_group);
    CHECK(best.T == doctest::Approx(1.9).epsilon(1e-12));
    CHECK(best.order == std::vector<int>{0, 2, 1});

    std::vector<prim::Rated> single = {{3, 0.5, 0}};
    best = oracle::brute_force_order(prim::GroupKind::Or, single);
    CHECK(best.T == 3.0);
    CHECK(best.order == std::vector<int>{0});

    std::vector<prim::Rated> too_many(9, prim::Rated{1, 0.5, 0});
    CHECK_THROWS_AS(oracle::brute_force_order(prim::GroupKind::Or, too_many), GuardError);
}

TEST_CASE("brute force min ratio path") {
    graph::AssetGraph g;
    g.nodes = {"s", "m", "g"};
    for (int i = 0; i < 3; ++i) g.index.emplace(g.nodes[i], i);
    g.edges.assign(9, graph::EdgeLabel{});
    g.edge(0, 2) = {10.0, 0.5};
    g.edge(0, 1) = {2.0, 0.9};
    g.edge(1, 2) = {3.0, 0.9};

    oracle::PathResult best = oracle::brute_force_min_ratio_path(g, 0, 2);
    CHECK(best.path == std::vector<int>{0, 1, 2});
    CHECK(best.T == doctest::Approx(4.7).epsilon(1e-12));
    CHECK(best.P == doctest::Approx(0.81).epsilon(1e-12));

    oracle::PathResult none = oracle::brute_force_min_ratio_path(g, 2, 0);
    CHECK(none.path.empty());
    CHECK(none.P == 0.0);
    CHECK(none.T == graph::kInf);

    graph::AssetGraph big;
    big.nodes.assign(8, "x");
    big.edges.assign(64, graph::EdgeLabel{});
    CHECK_THROWS_AS(oracle::brute_force_min_ratio_path(big, 0, 1), GuardError);
}

TEST_CASE("expectimax on canonical trees") {
    SplitMix64 rng(5);
    // a pure OR tree of three leaves equals the choose-order stats
    tree::AttackTree t = oracle::random_or_of_and_tree(rng, 3, 1);
    std::vector<prim::Rated> group;
    for (std::size_t a = 0; a < t.actions.size(); ++a) {
        group.push_back({t.actions[a].t, t.actions[a].p, static_cast<int>(a)});
    }
    double expected = prim::seq_stats_or(prim::choose_order(group)).T;
    CHECK(oracle::expectimax_tree_value(t) == doctest::Approx(expected).epsilon(1e-9));

    // empty tree solves to zero
    tree::AttackTree empty;
    empty.source = "s";
    empty.target = "t";
    empty.assets.push_back(tree::AssetNode{agent_asset("t"), {}, false});
    empty.root = 0;
    CHECK(oracle::expectimax_tree_value(empty) == 0.0);
}

TEST_CASE("monte carlo matches the analytic stats") {
    SimNode program = SimNode::group(
        prim::GroupKind::Or,
        {SimNode::action(4, 0.8), SimNode::action(1, 0.1), SimNode::action(10, 0.5)});
    prim::SeqStats analytic = oracle::analytic_stats(program);
    CHECK(analytic.T == doctest::Approx(6.0));
    CHECK(analytic.P == doctest::Approx(0.91));

    oracle::MonteCarloResult mc = oracle::monte_carlo_plan(program, 42, 1000000);
    CHECK(std::abs(mc.mean_cost - 6.0) <= 3.0 * mc.cost_stderr + 1e-9);
    CHECK(std::abs(mc.success_rate - 0.91) <= 3.0 * mc.success_stderr + 1e-9);
}

TEST_CASE("monte carlo degenerate programs") {
    SimNode certain = SimNode::action(2.5, 1.0);
    oracle::MonteCarloResult mc = oracle::monte_carlo_plan(certain, 1, 1000);
    CHECK(mc.mean_cost == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(mc.success_rate == 1.0);

    SimNode impossible = SimNode::action(2.5, 0.0);
    mc = oracle::monte_carlo_plan(impossible, 1, 1000);
    CHECK(mc.success_rate == 0.0);

    CHECK_THROWS_AS(oracle::monte_carlo_plan(certain, 1, 0), InputError);
}

TEST_CASE("monte carlo is deterministic per seed") {
    SimNode program = SimNode::group(
        prim::GroupKind::And, {SimNode::action(2, 0.5), SimNode::action(3, 0.9)});
    oracle::MonteCarloResult a = oracle::monte_carlo_plan(program, 7, 10000);
    oracle::MonteCarloResult b = oracle::monte_carlo_plan(program, 7, 10000);
    CHECK(a.mean_cost == b.mean_cost);
    CHECK(a.success_rate == b.success_rate);
    oracle::MonteCarloResult c = oracle::monte_carlo_plan(program, 8, 10000);
    CHECK(a.mean_cost != c.mean_cost);
}

TEST_CASE("tree programs simulate the solved contingency plan") {
    SplitMix64 rng(11);
    for (int i = 0; i < 20; ++i) {
        tree::AttackTree t = oracle::random_nested_tree(rng, 5);
        tree::TreeSolution sol = tree::solve_tree(t);
        SimNode program = oracle::tree_program(t, sol);
        prim::SeqStats analytic = oracle::analytic_stats(program);
        CHECK(analytic.T == doctest::Approx(sol.stats.T).epsilon(1e-9));
        CHECK(analytic.P == doctest::Approx(sol.stats.P).epsilon(1e-9));

        oracle::MonteCarloResult mc = oracle::monte_carlo_plan(program, 1000 + i, 200000);
        CHECK(std::abs(mc.mean_cost - analytic.T) <=
              4.0 * mc.cost_stderr + 1e-9 * std::max(1.0, analytic.T));
        CHECK(std::abs(mc.success_rate - analytic.P) <= 4.0 * mc.success_stderr + 1e-9);
    }
}

TEST_CASE("oracle check suite runs clean") {
    CHECK(oracle::run_oracle_checks(7, 50));
}
