#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aplan/core.hpp"

namespace aplan::pomdp {

using BeliefState = std::vector<double>;

// must sum to 1 within 1e-12 with nonnegative entries
void validate_belief(const BeliefState& belief);

// ⟨S, A, O, T, O, r, b0⟩ with dense matrices; state 0 is the absorbing
// terminal state.
struct PomdpModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    // transition[a][s][s'], observation[a][s'][o], reward[a][s]
    std::vector<std::vector<std::vector<double>>> transition;
    std::vector<std::vector<std::vector<double>>> observation;
    std::vector<std::vector<double>> reward;
    BeliefState b0;
    double discount = 0.95;
    int terminal = 0;
    // per-action default observation, a formatting hint for the exporter
    std::vector<int> export_default_obs;

    int state_index(const std::string& name) const;
    int action_index(const std::string& name) const;
    int observation_index(const std::string& name) const;
    void validate() const;  // stochastic rows, absorbing zero-reward terminal
};

// b_a(s'') = sum_s T(s,a,s'') b(s)
BeliefState temporary_belief(const PomdpModel& model, const BeliefState& b, int a);

// Pr(o | a, b) = sum_{s''} O(s'',a,o) b_a(s'')
double observation_probability(const PomdpModel& model, const BeliefState& b, int a, int o);

// Bayesian update  b'(s') = O(s',a,o) sum_s T(s,a,s') b(s) / Pr(o|a,b).
// A zero-probability observation is an error.
BeliefState belief_update(const PomdpModel& model, const BeliefState& b, int a, int o);

// Version-updating Markov chain; U is column-stochastic, v' = U v.
struct UpdateChain {
    std::vector<std::string> versions;
    std::vector<std::vector<double>> U;  // U[i][j] = Pr(version j -> version i)

    static UpdateChain from_spec(const std::vector<std::string>& versions, const OsChainSpec& spec);
    void validate() const;  // columns sum to 1
};

// v_T = U^T v0 by repeated matrix-vector products.
std::vector<double> initial_belief(std::vector<double> v0, const UpdateChain& chain, int t_days);

// Reward assembly knobs: r = r_c + r_t + r_d with r_c = value_scale * machine
// value on a successful exploit, r_t = -t, and r_d = -detection_scale *
// per-action-kind detection weight.
struct RewardOptions {
    double value_scale = 100.0;
    double detection_scale = 10.0;
    double exploit_detection = 0.0;
    double probe_detection = 0.0;
    double os_detect_detection = 0.0;
    double discount = 0.95;
};

// Single-pair POMDP over the target's configuration lattice: per OS
// candidate a chain base -> port open -> service -> vulnerable -> agent,
// truncated where no exploit applies. T_days ages the OS prior through the
// machine's update chain.
PomdpModel build_pomdp(const Scenario& scenario, const HostId& source, const HostId& target,
                       int t_days, const RewardOptions& options = {});

// Line-oriented model text (pomdp-solve style): preamble lists, `T:`/`O:`
// matrix lines with identity and wildcard forms, `R:` rows, `start:`.
std::string export_cassandra(const PomdpModel& model);
PomdpModel parse_cassandra(const std::string& text);

struct PolicyNode {
    int action = -1;
    double value = 0.0;
    // next decision per observation name (missing: zero-probability branch)
    std::map<std::string, std::shared_ptr<PolicyNode>> branches;
};

struct SolveResult {
    std::shared_ptr<PolicyNode> policy;
    double value = 0.0;
    std::size_t expanded_beliefs = 0;
};

// Exact expectimax over the reachable belief set with memoization; refuses
// runs that expand more than 100000 distinct beliefs.
SolveResult solve_exact(const PomdpModel& model, int horizon);

// Value of executing a fixed policy tree from belief b (used to check that
// re-running a deterministic test adds nothing).
double eval_policy(const PomdpModel& model, const PolicyNode& policy, const BeliefState& b,
                   int horizon);

std::string format_policy(const PomdpModel& model, const PolicyNode& policy, int max_depth = 6);

// "(0, 0, 1/4, 1/4, ...)": entries print as small fractions when they are
// one, as decimals otherwise.
std::string format_belief(const BeliefState& belief);

}  // namespace aplan::pomdp
