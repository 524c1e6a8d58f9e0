#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

#include "aplan/pomdp.hpp"
#include "aplan/scenario_io.hpp"

using namespace aplan;
using pomdp::BeliefState;
using pomdp::PomdpModel;

namespace {

Scenario fixture_scenario(const std::string& name) {
    const char* dir = std::getenv("APLAN_FIXTURES");
    REQUIRE(dir != nullptr);
    return io::load_scenario(std::string(dir) + "/" + name);
}

PomdpModel m0_model() {
    return pomdp::build_pomdp(fixture_scenario("m0.json"), "localhost", "M0", 0);
}

// the running example belief: uniform 1/8 over the win2003 and winXPsp2
// configuration states
BeliefState uniform_eighth(const PomdpModel& model) {
    BeliefState b(model.states.size(), 0.0);
    for (const char* name :
         {"M0-win2003", "M0-win2003-p445", "M0-win2003-p445-SMB", "M0-win2003-p445-SMB-vuln",
          "M0-winXPsp2", "M0-winXPsp2-p445", "M0-winXPsp2-p445-SMB", "M0-winXPsp2-p445-SMB-vuln"}) {
        b[model.state_index(name)] = 0.125;
    }
    return b;
}

}  // namespace

TEST_CASE("m0 model has the documented shape") {
    PomdpModel model = m0_model();
    CHECK(model.states.size() == 19);
    CHECK(model.actions.size() == 6);
    CHECK(model.states[0] == "terminal");
    CHECK(model.states[1] == "M0-win2000");
    CHECK(model.states[5] == "M0-win2000-p445-SMB-agent");
    CHECK(model.states[18] == "M0-winXPsp3-p445-SMB");
    CHECK(model.actions[0] == "Terminate");
    CHECK(model.actions[1] == "Probe-M0-p445");
    CHECK(model.actions[2] == "OSDetect-M0");
    CHECK(model.actions[3] == "Exploit-M0-win2000-SMB");
    CHECK(model.actions[5] == "Exploit-M0-winXPsp2-SMB");
    CHECK_NOTHROW(model.validate());
}

TEST_CASE("os detect prunes to the matching os group") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    int os_detect = model.action_index("OSDetect-M0");

    BeliefState winxp = pomdp::belief_update(model, b, os_detect, model.observation_index("winxp"));
    // exactly 1/4 over the four winXPsp2 states
    for (const char* name : {"M0-winXPsp2", "M0-winXPsp2-p445", "M0-winXPsp2-p445-SMB",
                             "M0-winXPsp2-p445-SMB-vuln"}) {
        CHECK(winxp[model.state_index(name)] == 0.25);
    }
    double mass = 0.0;
    for (double x : winxp) mass += x;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-15));

    BeliefState win = pomdp::belief_update(model, b, os_detect, model.observation_index("win"));
    for (const char* name :
         {"M0-win2003", "M0-win2003-p445", "M0-win2003-p445-SMB", "M0-win2003-p445-SMB-vuln"}) {
        CHECK(win[model.state_index(name)] == 0.25);
    }
}

TEST_CASE("port probe splits open and closed worlds") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    int probe = model.action_index("Probe-M0-p445");

    // Pr(open-port) = 6/8
    CHECK(pomdp::observation_probability(model, b, probe, model.observation_index("open-port")) ==
          doctest::Approx(0.75).epsilon(1e-15));

    BeliefState open = pomdp::belief_update(model, b, probe, model.observation_index("open-port"));
    for (const char* name : {"M0-win2003-p445", "M0-win2003-p445-SMB", "M0-win2003-p445-SMB-vuln",
                             "M0-winXPsp2-p445", "M0-winXPsp2-p445-SMB",
                             "M0-winXPsp2-p445-SMB-vuln"}) {
        CHECK(open[model.state_index(name)] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    }
    CHECK(open[model.state_index("M0-win2003")] == 0.0);

    BeliefState closed =
        pomdp::belief_update(model, b, probe, model.observation_index("closed-port"));
    CHECK(closed[model.state_index("M0-win2003")] == 0.5);
    CHECK(closed[model.state_index("M0-winXPsp2")] == 0.5);
}

TEST_CASE("exploit success collapses to the agent state and failure leaves 1/7") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    int exploit = model.action_index("Exploit-M0-win2003-SMB");

    BeliefState success =
        pomdp::belief_update(model, b, exploit, model.observation_index("agent-installed"));
    CHECK(success[model.state_index("M0-win2003-p445-SMB-agent")] == 1.0);

    BeliefState failure =
        pomdp::belief_update(model, b, exploit, model.observation_index("no-agent"));
    for (const char* name :
         {"M0-win2003", "M0-win2003-p445", "M0-win2003-p445-SMB", "M0-winXPsp2",
          "M0-winXPsp2-p445", "M0-winXPsp2-p445-SMB", "M0-winXPsp2-p445-SMB-vuln"}) {
        CHECK(failure[model.state_index(name)] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    }
    CHECK(failure[model.state_index("M0-win2003-p445-SMB-vuln")] == 0.0);
}

TEST_CASE("temporary belief and impossible observations") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    int probe = model.action_index("Probe-M0-p445");

    // tests are identity transitions: b_a == b
    BeliefState ba = pomdp::temporary_belief(model, b, probe);
    for (std::size_t s = 0; s < b.size(); ++s) CHECK(ba[s] == b[s]);

    CHECK_THROWS_AS(
        pomdp::belief_update(model, b, probe, model.observation_index("agent-installed")),
        InputError);
}

TEST_CASE("deterministic tests zero out inconsistent states") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    for (const char* action : {"Probe-M0-p445", "OSDetect-M0"}) {
        int a = model.action_index(action);
        for (std::size_t o = 0; o < model.observations.size(); ++o) {
            double po = pomdp::observation_probability(model, b, a, static_cast<int>(o));
            if (po == 0.0) continue;
            BeliefState updated = pomdp::belief_update(model, b, a, static_cast<int>(o));
            for (std::size_t s = 0; s < updated.size(); ++s) {
                if (model.observation[a][s][o] == 0.0) CHECK(updated[s] == 0.0);
            }
        }
    }
}

TEST_CASE("update chain ages the version belief") {
    OsChainSpec spec;
    spec.stay = {0.9, 1.0};
    spec.advance = {0.1, 0.0};
    spec.jump = {0.0, 0.0};
    spec.v0 = {1.0, 0.0};
    pomdp::UpdateChain chain = pomdp::UpdateChain::from_spec({"v1", "v2"}, spec);

    std::vector<double> t0 = pomdp::initial_belief(spec.v0, chain, 0);
    CHECK(t0[0] == 1.0);
    CHECK(t0[1] == 0.0);

    std::vector<double> t1 = pomdp::initial_belief(spec.v0, chain, 1);
    CHECK(t1[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(t1[1] == doctest::Approx(0.1).epsilon(1e-15));

    std::vector<double> t2 = pomdp::initial_belief(spec.v0, chain, 2);
    CHECK(t2[0] == doctest::Approx(0.81).epsilon(1e-15));
    CHECK(t2[1] == doctest::Approx(0.19).epsilon(1e-15));

    // identity chain: v0 forever
    OsChainSpec id_spec;
    id_spec.stay = {1.0, 1.0};
    id_spec.advance = {0.0, 0.0};
    id_spec.jump = {0.0, 0.0};
    id_spec.v0 = {0.3, 0.7};
    pomdp::UpdateChain id_chain = pomdp::UpdateChain::from_spec({"v1", "v2"}, id_spec);
    std::vector<double> later = pomdp::initial_belief(id_spec.v0, id_chain, 17);
    CHECK(later[0] == doctest::Approx(0.3).epsilon(1e-15));

    // belief stays a distribution for growing T
    OsChainSpec jumpy;
    jumpy.stay = {0.5, 0.6, 1.0};
    jumpy.advance = {0.3, 0.4, 0.0};
    jumpy.jump = {0.2, 0.0, 0.0};
    jumpy.v0 = {1.0, 0.0, 0.0};
    pomdp::UpdateChain jc = pomdp::UpdateChain::from_spec({"a", "b", "c"}, jumpy);
    for (int t = 0; t < 40; ++t) {
        std::vector<double> v = pomdp::initial_belief(jumpy.v0, jc, t);
        double sum = 0.0;
        for (double x : v) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("belief updates preserve normalization") {
    PomdpModel model = m0_model();
    BeliefState b = model.b0;
    pomdp::validate_belief(b);
    int probe = model.action_index("Probe-M0-p445");
    int detect = model.action_index("OSDetect-M0");
    for (int a : {probe, detect}) {
        for (std::size_t o = 0; o < model.observations.size(); ++o) {
            double po = pomdp::observation_probability(model, b, a, static_cast<int>(o));
            if (po == 0.0) continue;
            BeliefState updated = pomdp::belief_update(model, b, a, static_cast<int>(o));
            CHECK_NOTHROW(pomdp::validate_belief(updated));
        }
    }
}

TEST_CASE("cassandra export round trips") {
    PomdpModel model = m0_model();
    std::string text = pomdp::export_cassandra(model);
    PomdpModel back = pomdp::parse_cassandra(text);

    CHECK(back.states == model.states);
    CHECK(back.actions == model.actions);
    CHECK(back.observations == model.observations);
    CHECK(back.discount == model.discount);
    CHECK(back.terminal == model.terminal);
    REQUIRE(back.b0.size() == model.b0.size());
    for (std::size_t s = 0; s < model.b0.size(); ++s) CHECK(back.b0[s] == model.b0[s]);
    for (std::size_t a = 0; a < model.actions.size(); ++a) {
        for (std::size_t s = 0; s < model.states.size(); ++s) {
            CHECK(back.reward[a][s] == model.reward[a][s]);
            for (std::size_t s2 = 0; s2 < model.states.size(); ++s2) {
                CHECK(back.transition[a][s][s2] == model.transition[a][s][s2]);
            }
            for (std::size_t o = 0; o < model.observations.size(); ++o) {
                CHECK(back.observation[a][s][o] == model.observation[a][s][o]);
            }
        }
    }
}

TEST_CASE("os detect export block matches the documented table") {
    PomdpModel model = m0_model();
    std::string text = pomdp::export_cassandra(model);

    const char* expected =
        "T: OSDetect-M0 identity\n"
        "O: OSDetect-M0: * : * 0\n"
        "O: OSDetect-M0: * : undetected 1\n"
        "O: OSDetect-M0: M0-win2000 : win 1\n"
        "O: OSDetect-M0: M0-win2000-p445 : win 1\n"
        "O: OSDetect-M0: M0-win2000-p445-SMB : win 1\n"
        "O: OSDetect-M0: M0-win2000-p445-SMB-vuln : win 1\n"
        "O: OSDetect-M0: M0-win2000-p445-SMB-agent : win 1\n"
        "O: OSDetect-M0: M0-win2003 : win 1\n"
        "O: OSDetect-M0: M0-win2003-p445 : win 1\n"
        "O: OSDetect-M0: M0-win2003-p445-SMB : win 1\n"
        "O: OSDetect-M0: M0-win2003-p445-SMB-vuln : win 1\n"
        "O: OSDetect-M0: M0-win2003-p445-SMB-agent : win 1\n"
        "O: OSDetect-M0: M0-winXPsp2 : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp2-p445 : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp2-p445-SMB : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp2-p445-SMB-vuln : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp2-p445-SMB-agent : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp3 : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp3-p445 : winxp 1\n"
        "O: OSDetect-M0: M0-winXPsp3-p445-SMB : winxp 1\n";

    // whitespace-insensitive line comparison
    auto squash = [](const std::string& s) {
        std::string out;
        bool space = false;
        for (char c : s) {
            if (c == ' ' || c == '\t') {
                space = true;
                continue;
            }
            if (space && !out.empty() && c != '\n') out.push_back(' ');
            space = false;
            out.push_back(c);
        }
        return out;
    };
    std::string squashed = squash(text);
    std::istringstream lines(expected);
    std::string line;
    while (std::getline(lines, line)) {
        CHECK(squashed.find(squash(line)) != std::string::npos);
    }
}

TEST_CASE("identity transitions export in the compact form") {
    PomdpModel model = m0_model();
    std::string text = pomdp::export_cassandra(model);
    CHECK(text.find("T: Probe-M0-p445 identity") != std::string::npos);
    CHECK(text.find("T: Exploit-M0-win2003-SMB identity") != std::string::npos);
    CHECK(text.find("T: Exploit-M0-win2003-SMB: M0-win2003-p445-SMB-vuln : * 0") !=
          std::string::npos);
    CHECK(text.find(
              "T: Exploit-M0-win2003-SMB: M0-win2003-p445-SMB-vuln : M0-win2003-p445-SMB-agent 1") !=
          std::string::npos);
    CHECK(text.find("T: Terminate: * : terminal 1") != std::string::npos);
}

TEST_CASE("exact solver on a point-mass vulnerable belief") {
    PomdpModel model = m0_model();
    // start from certainty that M0 is win2003 and vulnerable
    model.b0.assign(model.states.size(), 0.0);
    model.b0[model.state_index("M0-win2003-p445-SMB-vuln")] = 1.0;

    pomdp::SolveResult result = pomdp::solve_exact(model, 3);
    REQUIRE(result.policy);
    CHECK(model.actions[result.policy->action] == "Exploit-M0-win2003-SMB");
    // r_c = 100 * value, minus the exploit duration 12
    CHECK(result.value == doctest::Approx(100.0 - 12.0).epsilon(1e-9));
    // after agent-installed the best continuation is Terminate (value 0)
    auto branch = result.policy->branches.at("agent-installed");
    REQUIRE(branch);
    CHECK(model.actions[branch->action] == "Terminate");
}

TEST_CASE("all-negative models terminate immediately") {
    PomdpModel model = m0_model();
    // no vulnerable mass at all: exploit can never pay off
    model.b0.assign(model.states.size(), 0.0);
    model.b0[model.state_index("M0-winXPsp3")] = 1.0;
    pomdp::SolveResult result = pomdp::solve_exact(model, 4);
    REQUIRE(result.policy);
    CHECK(model.actions[result.policy->action] == "Terminate");
    CHECK(result.value == 0.0);
}

TEST_CASE("repeating a deterministic test is valueless") {
    PomdpModel model = m0_model();
    model.b0 = uniform_eighth(model);
    int probe = model.action_index("Probe-M0-p445");
    int open = model.observation_index("open-port");

    // a repeated test returns the same observation and leaves the belief
    // untouched
    BeliefState b1 = pomdp::belief_update(model, model.b0, probe, open);
    BeliefState b2 = pomdp::belief_update(model, b1, probe, open);
    for (std::size_t s = 0; s < b1.size(); ++s) {
        CHECK(b1[s] == doctest::Approx(b2[s]).epsilon(1e-15));
    }

    // with the probe duration zeroed out and no discounting, inserting a
    // duplicate probe in front of the optimal policy leaves its value
    // unchanged: the observation repeats and the belief split is linear
    PomdpModel free_probe = model;
    for (std::size_t s = 0; s < free_probe.states.size(); ++s) free_probe.reward[probe][s] = 0.0;
    pomdp::SolveResult best = pomdp::solve_exact(free_probe, 4);
    REQUIRE(best.policy);

    auto duplicated = std::make_shared<pomdp::PolicyNode>();
    duplicated->action = probe;
    for (const std::string& obs : free_probe.observations) duplicated->branches[obs] = best.policy;

    free_probe.discount = 1.0;  // isolate the information value
    double original = pomdp::eval_policy(free_probe, *best.policy, free_probe.b0, 4);
    double wrapped = pomdp::eval_policy(free_probe, *duplicated, free_probe.b0, 5);
    CHECK(wrapped == doctest::Approx(original).epsilon(1e-12));
}

TEST_CASE("belief printing uses small fractions") {
    PomdpModel model = m0_model();
    BeliefState b = uniform_eighth(model);
    std::string text = pomdp::format_belief(b);
    CHECK(text.find("1/8") != std::string::npos);
    int probe = model.action_index("Probe-M0-p445");
    BeliefState open = pomdp::belief_update(model, b, probe, model.observation_index("open-port"));
    CHECK(pomdp::format_belief(open).find("1/6") != std::string::npos);
    CHECK(pomdp::format_belief({0.0, 1.0}) == "(0, 1)");
}

TEST_CASE("solver horizon and guard validation") {
    PomdpModel model = m0_model();
    CHECK_THROWS_AS(pomdp::solve_exact(model, 100), InputError);
    pomdp::SolveResult zero = pomdp::solve_exact(model, 0);
    CHECK(zero.value == 0.0);
}

TEST_CASE("four exploit fixture policy shape") {
    Scenario scenario = fixture_scenario("four_exploits.json");
    PomdpModel model = pomdp::build_pomdp(scenario, "localhost", "M1", 0);
    CHECK(model.actions.size() == 9);

    pomdp::SolveResult result = pomdp::solve_exact(model, 6);
    REQUIRE(result.policy);

    // probe port 80 first
    CHECK(model.actions[result.policy->action] == "Probe-M1-p80");

    // port open: IIS before Apache, no OS detection
    auto open_branch = result.policy->branches.at("open-port");
    REQUIRE(open_branch);
    CHECK(model.actions[open_branch->action] == "Exploit-M1-windows-iis");
    auto after_iis_failure = open_branch->branches.at("no-agent");
    REQUIRE(after_iis_failure);
    CHECK(model.actions[after_iis_failure->action] == "Exploit-M1-linux-apache");

    // the OS detect action never appears in the optimal policy tree
    std::function<void(const pomdp::PolicyNode&)> walk = [&](const pomdp::PolicyNode& node) {
        if (node.action >= 0) CHECK(model.actions[node.action] != "OSDetect-M1");
        for (const auto& [obs, child] : node.branches) {
            if (child) walk(*child);
        }
    };
    walk(*result.policy);
}

TEST_CASE("single-os no-port machine builds a 3-state chain") {
    Scenario s;
    s.subnets = {"lan"};
    Machine a;
    a.id = "localhost";
    a.os.name = "Linux";
    a.subnets = {"lan"};
    s.machines.push_back(a);
    Machine t;
    t.id = "S1";
    t.os.name = "solaris";
    t.subnets = {"lan"};
    t.value = 1.0;
    MachineUncertainty u;
    u.os_candidates.push_back({"solaris", "solaris", 1.0});
    t.uncertainty = u;
    s.machines.push_back(t);
    Action e;
    e.id = "telnet";
    e.name = "Telnet_Exploit";
    e.kind = ActionKind::Exploit;
    e.t = 4.0;
    e.requirements.push_back(os_knowledge_asset(kTargetPlaceholder, {{"name", "solaris"}}));
    e.requirements.push_back(ip_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder));
    e.result = agent_asset(kTargetPlaceholder);
    s.exploits.push_back(e);
    s.source = "localhost";
    s.goals.push_back(agent_asset("S1"));

    PomdpModel model = pomdp::build_pomdp(s, "localhost", "S1", 0);
    REQUIRE(model.states.size() == 4);  // terminal + base, vuln, agent
    CHECK(model.states[1] == "S1-solaris");
    CHECK(model.states[2] == "S1-solaris-vuln");
    CHECK(model.states[3] == "S1-solaris-agent");
    // Terminate, OSDetect, one exploit; no port to probe
    CHECK(model.actions.size() == 3);
    CHECK_NOTHROW(model.validate());
}

TEST_CASE("empty-action models export header-only files") {
    PomdpModel model;
    model.states = {"terminal"};
    model.observations = {"undetected"};
    model.b0 = {1.0};
    model.terminal = 0;
    std::string text = pomdp::export_cassandra(model);
    CHECK(text.find("T:") == std::string::npos);
    CHECK(text.find("states: terminal") != std::string::npos);
    PomdpModel back = pomdp::parse_cassandra(text);
    CHECK(back.states == model.states);
    CHECK(back.actions.empty());
}

TEST_CASE("build_pomdp input validation") {
    Scenario scenario = fixture_scenario("m0.json");
    CHECK_THROWS_AS(pomdp::build_pomdp(scenario, "M0", "M0", 0), InputError);
    CHECK_THROWS_AS(pomdp::build_pomdp(scenario, "localhost", "ghost", 0), InputError);
}
