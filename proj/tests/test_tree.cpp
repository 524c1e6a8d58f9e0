#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aplan/oracle.hpp"
#include "aplan/rng.hpp"
#include "aplan/scenario_io.hpp"
#include "aplan/tree.hpp"

using namespace aplan;

namespace {

Action exploit_template(std::string id, double t, double p, bool needs_os, Port port) {
    Action e;
    e.id = std::move(id);
    e.name = e.id;
    e.kind = ActionKind::Exploit;
    e.p = p;
    e.t = t;
    if (needs_os) {
        e.requirements.push_back(os_knowledge_asset(kTargetPlaceholder, {{"name", "Windows"}}));
    }
    e.requirements.push_back(tcp_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder, port));
    e.result = agent_asset(kTargetPlaceholder);
    return e;
}

Scenario pair_scenario() {
    Scenario s;
    s.subnets = {"lan"};
    Machine a;
    a.id = "src";
    a.os.name = "Linux";
    a.subnets = {"lan"};
    s.machines.push_back(a);
    Machine t;
    t.id = "dst";
    t.os.name = "Windows";
    t.open_tcp_ports = {445};
    t.subnets = {"lan"};
    s.machines.push_back(t);
    s.source = "src";
    s.goals.push_back(agent_asset("dst"));
    return s;
}

}  // namespace

TEST_CASE("tree structure for a single exploit") {
    Scenario s = pair_scenario();
    s.exploits.push_back(exploit_template("e1", 10, 0.9, true, 445));

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    // root agent asset, one exploit provider, two requirement assets
    // (os knowledge and tcp connectivity), each with one probe provider;
    // the tcp probe needs ip connectivity provided by a host probe
    REQUIRE(t.root == 0);
    REQUIRE(t.assets[0].providers.size() == 1);
    const tree::ActionNode& exploit = t.actions[t.assets[0].providers[0]];
    CHECK(exploit.kind == ActionKind::Exploit);
    REQUIRE(exploit.requirements.size() == 2);
    const tree::AssetNode& os_req = t.assets[exploit.requirements[0]];
    CHECK(os_req.asset.kind == AssetKind::OsKnowledge);
    REQUIRE(os_req.providers.size() == 1);
    CHECK(t.actions[os_req.providers[0]].kind == ActionKind::OsDetect);
    const tree::AssetNode& tcp_req = t.assets[exploit.requirements[1]];
    CHECK(tcp_req.asset.kind == AssetKind::TcpConnectivity);
    REQUIRE(tcp_req.providers.size() == 1);
    CHECK(t.actions[tcp_req.providers[0]].kind == ActionKind::ProbePort);

    CHECK(t.assets.size() == 4);   // agent, os, tcp, ip
    CHECK(t.actions.size() == 4);  // exploit, os detect, tcp probe, host probe
}

TEST_CASE("build preconditions") {
    Scenario s = pair_scenario();
    s.exploits.push_back(exploit_template("e1", 10, 0.9, false, 445));
    CHECK_THROWS_AS(tree::build_attack_tree(s, "src", "src"), InputError);
    CHECK_THROWS_AS(tree::build_attack_tree(s, "src", "ghost"), InputError);
}

TEST_CASE("inapplicable exploits are filtered out") {
    Scenario s = pair_scenario();
    s.exploits.push_back(exploit_template("closed-port", 10, 0.9, false, 8080));
    Action wrong_os = exploit_template("wrong-os", 10, 0.9, false, 445);
    wrong_os.requirements.push_back(os_knowledge_asset(kTargetPlaceholder, {{"name", "Solaris"}}));
    s.exploits.push_back(wrong_os);

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    CHECK(t.assets[t.root].providers.empty());
    tree::TreeSolution sol = tree::solve_tree(t);
    CHECK(sol.stats.T == 0.0);
    CHECK(sol.stats.P == 0.0);
}

TEST_CASE("no shared subnet means no providers") {
    Scenario s = pair_scenario();
    s.subnets.push_back("other");
    s.machines[1].subnets = {"other"};
    s.exploits.push_back(exploit_template("e1", 10, 0.9, false, 445));
    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    CHECK(t.assets[t.root].providers.empty());
}

TEST_CASE("or reduction over two leaf exploits") {
    Scenario s = pair_scenario();
    // known connectivity makes both exploits leaves
    s.known.push_back(tcp_connectivity_asset("src", "dst", 445));
    s.exploits.push_back(exploit_template("fast", 4, 0.8, false, 445));
    s.exploits.push_back(exploit_template("slow", 10, 0.5, false, 445));

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution sol = tree::solve_tree(t);
    CHECK(sol.stats.T == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(sol.stats.P == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("and reduction runs requirements before the exploit") {
    Scenario s = pair_scenario();
    s.probe_costs.tcp_t = 1.0;
    s.probe_costs.tcp_p = 1.0;
    s.known.push_back(ip_connectivity_asset("src", "dst"));
    s.exploits.push_back(exploit_template("e1", 4, 0.9, false, 445));

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution sol = tree::solve_tree(t);
    // probe first: T = 1 + 4 = 5, P = 0.9
    CHECK(sol.stats.T == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(sol.stats.P == doctest::Approx(0.9).epsilon(1e-12));

    std::vector<PlanStep> steps = tree::plan_steps(t, sol);
    REQUIRE(steps.size() == 2);
    CHECK(steps[0].name == "TCP_connect_port445");
    CHECK(steps[1].name == "e1");
}

TEST_CASE("known facts enter as certainties") {
    Scenario s = pair_scenario();
    s.known.push_back(tcp_connectivity_asset("src", "dst", 445));
    s.exploits.push_back(exploit_template("e1", 10, 0.5, false, 445));
    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution sol = tree::solve_tree(t);
    CHECK(sol.stats.T == doctest::Approx(10.0));
    CHECK(sol.stats.P == doctest::Approx(0.5));
    CHECK(tree::plan_steps(t, sol).size() == 1);  // the known fact is no step
}

TEST_CASE("replanning after outcomes") {
    Scenario s = pair_scenario();
    s.known.push_back(tcp_connectivity_asset("src", "dst", 445));
    s.exploits.push_back(exploit_template("fast", 4, 0.8, false, 445));
    s.exploits.push_back(exploit_template("slow", 10, 0.5, false, 445));

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution sol = tree::solve_tree(t);
    int first = sol.plan.front();

    SUBCASE("failure removes the provider") {
        tree::AttackTree pruned = tree::replan_after(t, first, tree::Outcome::Failure);
        tree::TreeSolution after = tree::solve_tree(pruned);
        CHECK(after.stats.T == doctest::Approx(10.0));
        CHECK(after.stats.P == doctest::Approx(0.5));
        int head = after.plan.front();
        CHECK(pruned.actions[head].catalog->id == "slow");

        // failing the remaining provider kills the root
        tree::AttackTree dead = tree::replan_after(pruned, head, tree::Outcome::Failure);
        CHECK(tree::solve_tree(dead).stats.P == 0.0);
    }

    SUBCASE("success turns the provided asset into a fact") {
        tree::AttackTree done = tree::replan_after(t, first, tree::Outcome::Success);
        tree::TreeSolution after = tree::solve_tree(done);
        CHECK(after.stats.T == 0.0);
        CHECK(after.stats.P == 1.0);
        CHECK(after.plan.empty());
    }

    SUBCASE("unknown action is an input error") {
        CHECK_THROWS_AS(tree::replan_after(t, 999, tree::Outcome::Failure), InputError);
    }
}

TEST_CASE("probe success drops its contribution from the AND group") {
    Scenario s = pair_scenario();
    s.known.push_back(ip_connectivity_asset("src", "dst"));
    s.exploits.push_back(exploit_template("e1", 4, 0.9, false, 445));

    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution before = tree::solve_tree(t);
    CHECK(before.stats.T == doctest::Approx(5.0));

    int probe = before.plan.front();
    CHECK(t.actions[probe].kind == ActionKind::ProbePort);
    tree::AttackTree after_tree = tree::replan_after(t, probe, tree::Outcome::Success);
    tree::TreeSolution after = tree::solve_tree(after_tree);
    CHECK(after.stats.T == doctest::Approx(4.0));  // dropped by the probe's cost
    CHECK(after.stats.P == doctest::Approx(0.9));
}

TEST_CASE("annotated tree dump is valid json with per-node stats") {
    Scenario s = pair_scenario();
    s.exploits.push_back(exploit_template("e1", 10, 0.9, true, 445));
    tree::AttackTree t = tree::build_attack_tree(s, "src", "dst");
    tree::TreeSolution sol = tree::solve_tree(t);
    std::string dump = aplan::io::tree_to_json(t, sol);
    CHECK(dump.find("\"provider-order\"") != std::string::npos);
    CHECK(dump.find("\"requirement-order\"") != std::string::npos);
    CHECK(dump.find("\"prob\": 0.9") != std::string::npos);
    CHECK(dump.find("OS_detect") != std::string::npos);
}

TEST_CASE("solver value matches adaptive expectimax on two-layer trees") {
    SplitMix64 rng(41);
    for (int i = 0; i < 400; ++i) {
        tree::AttackTree t = oracle::random_or_of_and_tree(rng, 3, 2);
        double planner = tree::solve_tree(t).stats.T;
        double adaptive = oracle::expectimax_tree_value(t);
        CHECK(planner == doctest::Approx(adaptive).epsilon(1e-9));
    }
}

TEST_CASE("solver picks the best static ordering of nested trees") {
    SplitMix64 rng(47);
    for (int i = 0; i < 300; ++i) {
        tree::AttackTree t = oracle::random_nested_tree(rng, 6);
        double planner = tree::solve_tree(t).stats.T;
        CHECK(planner == doctest::Approx(oracle::static_order_min_value(t)).epsilon(1e-9));
        // replanning mid-attack can only improve on the static plan
        CHECK(planner >= oracle::expectimax_tree_value(t) - 1e-9);
    }
}

TEST_CASE("pruning a zero-probability provider changes nothing") {
    SplitMix64 rng(53);
    for (int i = 0; i < 100; ++i) {
        tree::AttackTree t = oracle::random_or_of_and_tree(rng, 3, 2);
        prim::SeqStats before = tree::solve_tree(t).stats;
        tree::ActionNode hopeless;
        hopeless.kind = ActionKind::Plumbing;
        hopeless.t = rng.uniform(0.1, 50.0);
        hopeless.p = 0.0;
        hopeless.parent_asset = t.root;
        t.actions.push_back(hopeless);
        t.assets[t.root].providers.push_back(static_cast<int>(t.actions.size()) - 1);
        prim::SeqStats after = tree::solve_tree(t).stats;
        CHECK(after.T == before.T);
        CHECK(after.P == before.P);
    }
}

TEST_CASE("a pure and tree reduces to the and-order stats") {
    SplitMix64 rng(59);
    for (int i = 0; i < 100; ++i) {
        // one collector action whose requirements are single-provider leaves
        tree::AttackTree t;
        t.source = "s";
        t.target = "t";
        t.assets.push_back(tree::AssetNode{agent_asset("t"), {}, false});
        t.root = 0;
        tree::ActionNode collector;
        collector.kind = ActionKind::Plumbing;
        collector.t = 0.0;
        collector.p = 1.0;
        collector.parent_asset = 0;
        t.actions.push_back(collector);
        t.assets[0].providers.push_back(0);

        std::vector<prim::Rated> leaves = oracle::random_group(rng, 1, 5);
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            Asset asset;
            asset.kind = AssetKind::OsKnowledge;
            asset.host = "t";
            t.assets.push_back(tree::AssetNode{asset, {}, false});
            int asset_idx = static_cast<int>(t.assets.size()) - 1;
            tree::ActionNode leaf;
            leaf.kind = ActionKind::Plumbing;
            leaf.t = leaves[k].t;
            leaf.p = leaves[k].p;
            leaf.parent_asset = asset_idx;
            t.actions.push_back(leaf);
            t.assets[asset_idx].providers.push_back(static_cast<int>(t.actions.size()) - 1);
            t.actions[0].requirements.push_back(asset_idx);
        }

        prim::SeqStats expected = prim::seq_stats_and(prim::and_order(leaves).order);
        prim::SeqStats actual = tree::solve_tree(t).stats;
        CHECK(actual.T == doctest::Approx(expected.T).epsilon(1e-12));
        CHECK(actual.P == doctest::Approx(expected.P).epsilon(1e-12));
    }
}

TEST_CASE("pure or and pure and trees reduce to the primitive stats") {
    SplitMix64 rng(43);
    for (int i = 0; i < 100; ++i) {
        tree::AttackTree flat = oracle::random_or_of_and_tree(rng, 3, 1);  // leaves only
        double expected =
            prim::seq_stats_or(
                prim::choose_order([&] {
                    std::vector<prim::Rated> group;
                    for (std::size_t a = 0; a < flat.actions.size(); ++a) {
                        group.push_back({flat.actions[a].t, flat.actions[a].p, static_cast<int>(a)});
                    }
                    return group;
                }()))
                .T;
        CHECK(tree::solve_tree(flat).stats.T == doctest::Approx(expected).epsilon(1e-12));
    }
}
