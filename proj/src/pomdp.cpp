#include "aplan/pomdp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace aplan::pomdp {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string fmt(double value) {
    char buffer[32];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

}  // namespace

void validate_belief(const BeliefState& belief) {
    double sum = 0.0;
    for (double x : belief) {
        if (x < 0.0 || !std::isfinite(x)) throw InputError("belief entry out of range");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
        throw InputError("belief does not sum to 1 (sum = " + fmt(sum) + ")");
    }
}

int PomdpModel::state_index(const std::string& name) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == name) return static_cast<int>(i);
    }
    throw InputError("unknown state: " + name);
}

int PomdpModel::action_index(const std::string& name) const {
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] == name) return static_cast<int>(i);
    }
    throw InputError("unknown action: " + name);
}

int PomdpModel::observation_index(const std::string& name) const {
    for (std::size_t i = 0; i < observations.size(); ++i) {
        if (observations[i] == name) return static_cast<int>(i);
    }
    throw InputError("unknown observation: " + name);
}

void PomdpModel::validate() const {
    const std::size_t S = states.size();
    const std::size_t A = actions.size();
    const std::size_t Ob = observations.size();
    if (transition.size() != A || observation.size() != A || reward.size() != A) {
        throw InputError("pomdp model: matrix sizes do not match the action count");
    }
    for (std::size_t a = 0; a < A; ++a) {
        if (transition[a].size() != S || observation[a].size() != S || reward[a].size() != S) {
            throw InputError("pomdp model: matrix sizes do not match the state count");
        }
        for (std::size_t s = 0; s < S; ++s) {
            double tsum = 0.0;
            for (double x : transition[a][s]) tsum += x;
            if (std::abs(tsum - 1.0) > kRowTolerance) {
                throw InputError("transition row does not sum to 1: action " + actions[a] +
                                 ", state " + states[s]);
            }
            if (observation[a][s].size() != Ob) {
                throw InputError("pomdp model: observation row size mismatch");
            }
            double osum = 0.0;
            for (double x : observation[a][s]) osum += x;
            if (std::abs(osum - 1.0) > kRowTolerance) {
                throw InputError("observation row does not sum to 1: action " + actions[a] +
                                 ", state " + states[s]);
            }
        }
    }
    if (terminal >= 0) {
        for (std::size_t a = 0; a < A; ++a) {
            if (transition[a][terminal][terminal] != 1.0) {
                throw InputError("terminal state is not absorbing under " + actions[a]);
            }
            if (reward[a][terminal] != 0.0) {
                throw InputError("terminal state carries reward under " + actions[a]);
            }
        }
    }
    if (!b0.empty()) {
        if (b0.size() != S) throw InputError("initial belief size mismatch");
        validate_belief(b0);
    }
}

BeliefState temporary_belief(const PomdpModel& model, const BeliefState& b, int a) {
    const std::size_t S = model.states.size();
    BeliefState ba(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        if (b[s] == 0.0) continue;
        const std::vector<double>& row = model.transition[a][s];
        for (std::size_t s2 = 0; s2 < S; ++s2) {
            if (row[s2] != 0.0) ba[s2] += row[s2] * b[s];
        }
    }
    return ba;
}

double observation_probability(const PomdpModel& model, const BeliefState& b, int a, int o) {
    BeliefState ba = temporary_belief(model, b, a);
    double prob = 0.0;
    for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
        prob += model.observation[a][s2][o] * ba[s2];
    }
    return prob;
}

BeliefState belief_update(const PomdpModel& model, const BeliefState& b, int a, int o) {
    BeliefState ba = temporary_belief(model, b, a);
    double norm = 0.0;
    for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
        ba[s2] *= model.observation[a][s2][o];
        norm += ba[s2];
    }
    if (norm <= 0.0) {
        throw InputError("impossible observation " + model.observations[o] + " under action " +
                         model.actions[a]);
    }
    for (double& x : ba) x /= norm;
    return ba;
}

UpdateChain UpdateChain::from_spec(const std::vector<std::string>& versions,
                                   const OsChainSpec& spec) {
    const std::size_t n = versions.size();
    if (spec.stay.size() != n || spec.advance.size() != n || spec.jump.size() != n ||
        spec.v0.size() != n) {
        throw InputError("update chain: parameter vectors must match the version count");
    }
    UpdateChain chain;
    chain.versions = versions;
    chain.U.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        chain.U[j][j] += spec.stay[j];
        if (spec.advance[j] != 0.0) {
            if (j + 1 >= n) throw InputError("update chain: last version cannot advance");
            chain.U[j + 1][j] += spec.advance[j];
        }
        if (spec.jump[j] != 0.0) chain.U[n - 1][j] += spec.jump[j];
    }
    chain.validate();
    return chain;
}

void UpdateChain::validate() const {
    for (std::size_t j = 0; j < U.size(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < U.size(); ++i) sum += U[i][j];
        if (std::abs(sum - 1.0) > kRowTolerance) {
            throw InputError("update chain: column " + std::to_string(j) + " does not sum to 1");
        }
    }
}

std::vector<double> initial_belief(std::vector<double> v0, const UpdateChain& chain, int t_days) {
    if (t_days < 0) throw InputError("initial_belief: negative time delay");
    validate_belief(v0);
    const std::size_t n = v0.size();
    if (chain.U.size() != n) throw InputError("initial_belief: dimension mismatch");
    std::vector<double> v = std::move(v0);
    std::vector<double> next(n);
    for (int step = 0; step < t_days; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (v[j] == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) next[i] += chain.U[i][j] * v[j];
        }
        v.swap(next);
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
    return v;
}

// ---------------------------------------------------------------------------
// Model construction

namespace {

struct Branch {
    Port port = 0;
    std::string service;
    bool udp = false;
    double p_open = 0.5;
    double p_service = 0.5;
    double p_vulnerable = 0.5;
    bool service_level() const { return !service.empty() && p_service < 1.0; }
};

struct CandidateExploit {
    const Action* templ = nullptr;
    int branch = -1;
    double t = 0.0;
};

struct Lattice {
    // per candidate, per branch: number of pre-agent statuses
    std::vector<std::vector<int>> status_count;
    std::vector<std::vector<bool>> vulnerable;
    // state ids: per candidate a contiguous block of config states (+ agent)
    std::vector<std::vector<int>> config_states;  // flattened status tuples
    std::vector<int> agent_state;                 // -1 when the candidate has no exploit
};

struct ExploitAction {
    std::string name;
    const Action* templ;
    int candidate;
    int branch;
};

// one (port, service) pair feeding the configuration lattice
std::vector<Branch> derive_branches(const Machine& machine,
                                    const std::vector<const Action*>& exploits) {
    std::vector<Branch> branches;
    for (const Action* e : exploits) {
        Branch b;
        for (const Asset& req : e->requirements) {
            if (req.kind == AssetKind::TcpConnectivity && req.port) {
                b.port = *req.port;
            } else if (req.kind == AssetKind::UdpConnectivity && req.port) {
                b.port = *req.port;
                b.udp = true;
            } else if (req.kind == AssetKind::ApplicationKnowledge) {
                auto it = req.detail.find("application");
                if (it != req.detail.end()) b.service = it->second;
            }
        }
        bool seen = std::any_of(branches.begin(), branches.end(), [&b](const Branch& other) {
            return other.port == b.port && other.service == b.service;
        });
        if (!seen) branches.push_back(std::move(b));
    }
    if (machine.uncertainty) {
        for (Branch& b : branches) {
            for (const BranchPrior& prior : machine.uncertainty->branches) {
                if (prior.port == b.port && prior.service == b.service) {
                    b.p_open = prior.p_open;
                    b.p_service = prior.p_service;
                    b.p_vulnerable = prior.p_vulnerable;
                }
            }
        }
    }
    return branches;
}

// exploit's OS requirement, if any, must name the candidate
bool exploit_matches_candidate(const Action& templ, const OsCandidate& candidate) {
    for (const Asset& req : templ.requirements) {
        if (req.kind != AssetKind::OsKnowledge) continue;
        auto it = req.detail.find("name");
        if (it != req.detail.end() && it->second != candidate.name) return false;
    }
    return true;
}

std::string status_suffix(const Branch& branch, bool vulnerable, int status) {
    std::vector<std::string> parts;
    if (branch.port != 0) {
        std::string open = "-p" + std::to_string(branch.port);
        if (!branch.service.empty() && !branch.service_level()) open += "-" + branch.service;
        parts.push_back(open);
        if (branch.service_level()) parts.push_back("-" + branch.service);
    } else if (branch.service_level()) {
        parts.push_back("-" + branch.service);
    }
    if (vulnerable) parts.push_back("-vuln");
    std::string suffix;
    for (int k = 0; k < status; ++k) suffix += parts[k];
    return suffix;
}

int branch_status_count(const Branch& branch, bool vulnerable) {
    int count = 1;
    if (branch.port != 0) ++count;
    if (branch.service_level()) ++count;
    if (vulnerable) ++count;
    return count;
}

// conditional advance probability from status k to k+1
std::vector<double> branch_advance(const Branch& branch, bool vulnerable) {
    std::vector<double> adv;
    if (branch.port != 0) {
        adv.push_back(branch.p_open);
        if (branch.service_level()) adv.push_back(branch.p_service);
    } else if (branch.service_level()) {
        adv.push_back(branch.p_service);
    }
    if (vulnerable) adv.push_back(branch.p_vulnerable);
    return adv;
}

}  // namespace

PomdpModel build_pomdp(const Scenario& scenario, const HostId& source, const HostId& target,
                       int t_days, const RewardOptions& options) {
    const Machine& machine = scenario.at(target);
    scenario.at(source);
    if (source == target) throw InputError("build_pomdp: source equals target");

    // OS candidates and aged weights
    std::vector<OsCandidate> candidates;
    if (machine.uncertainty && !machine.uncertainty->os_candidates.empty()) {
        candidates = machine.uncertainty->os_candidates;
        if (machine.uncertainty->os_chain) {
            std::vector<std::string> names;
            for (const OsCandidate& c : candidates) names.push_back(c.name);
            UpdateChain chain = UpdateChain::from_spec(names, *machine.uncertainty->os_chain);
            std::vector<double> aged =
                initial_belief(machine.uncertainty->os_chain->v0, chain, t_days);
            for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].weight = aged[i];
        }
    } else {
        OsCandidate c;
        c.name = machine.os.name.empty() ? "unknown" : machine.os.name;
        c.detect = c.name;
        c.weight = 1.0;
        candidates.push_back(std::move(c));
    }
    double weight_sum = 0.0;
    for (const OsCandidate& c : candidates) weight_sum += c.weight;
    if (weight_sum <= 0.0) throw InputError("build_pomdp: candidate weights sum to zero");
    for (OsCandidate& c : candidates) c.weight /= weight_sum;

    // catalog exploits aimed at this machine
    std::vector<const Action*> exploits;
    for (const Action& e : scenario.exploits) {
        if (e.kind != ActionKind::Exploit) continue;
        const HostId& host = e.result.host;
        if (host == kTargetPlaceholder || host == target) exploits.push_back(&e);
    }

    std::vector<Branch> branches = derive_branches(machine, exploits);
    const int C = static_cast<int>(candidates.size());
    const int B = static_cast<int>(branches.size());

    PomdpModel model;
    model.discount = options.discount;
    model.states.push_back("terminal");
    model.terminal = 0;

    Lattice lattice;
    lattice.status_count.assign(C, std::vector<int>(B, 1));
    lattice.vulnerable.assign(C, std::vector<bool>(B, false));
    lattice.config_states.resize(C);
    lattice.agent_state.assign(C, -1);

    std::vector<ExploitAction> exploit_actions;
    for (const Action* e : exploits) {
        Branch key = derive_branches(machine, {e})[0];
        int branch = -1;
        for (int b = 0; b < B; ++b) {
            if (branches[b].port == key.port && branches[b].service == key.service) branch = b;
        }
        for (int c = 0; c < C; ++c) {
            if (!exploit_matches_candidate(*e, candidates[c])) continue;
            lattice.vulnerable[c][branch] = true;
            std::string name = "Exploit-" + machine.id + "-" + candidates[c].name;
            if (!branches[branch].service.empty()) name += "-" + branches[branch].service;
            exploit_actions.push_back({name, e, c, branch});
        }
    }

    // enumerate configuration states per candidate (row-major over branch
    // statuses, last branch fastest), then the candidate's agent state
    std::vector<std::vector<std::vector<double>>> advance(C);
    for (int c = 0; c < C; ++c) {
        advance[c].resize(B);
        int combos = 1;
        for (int b = 0; b < B; ++b) {
            lattice.status_count[c][b] = branch_status_count(branches[b], lattice.vulnerable[c][b]);
            advance[c][b] = branch_advance(branches[b], lattice.vulnerable[c][b]);
            combos *= lattice.status_count[c][b];
        }
        for (int combo = 0; combo < combos; ++combo) {
            std::string name = machine.id + "-" + candidates[c].name;
            std::vector<int> statuses(B);
            int rest = combo;
            for (int b = B - 1; b >= 0; --b) {
                statuses[b] = rest % lattice.status_count[c][b];
                rest /= lattice.status_count[c][b];
            }
            for (int b = 0; b < B; ++b) {
                name += status_suffix(branches[b], lattice.vulnerable[c][b], statuses[b]);
            }
            lattice.config_states[c].push_back(static_cast<int>(model.states.size()));
            model.states.push_back(std::move(name));
        }
        bool exploitable = std::any_of(lattice.vulnerable[c].begin(), lattice.vulnerable[c].end(),
                                       [](bool v) { return v; });
        if (exploitable) {
            std::string name = machine.id + "-" + candidates[c].name;
            if (B == 1) {
                int top = lattice.status_count[c][0] - 2;  // through the service level
                name += status_suffix(branches[0], lattice.vulnerable[c][0], top);
            }
            name += "-agent";
            lattice.agent_state[c] = static_cast<int>(model.states.size());
            model.states.push_back(std::move(name));
        }
    }

    // actions: Terminate, one probe per distinct port, OS detect, exploits
    model.actions.push_back("Terminate");
    std::vector<Port> probe_ports;
    std::vector<bool> probe_udp;
    for (const Branch& b : branches) {
        if (b.port == 0) continue;
        if (std::find(probe_ports.begin(), probe_ports.end(), b.port) == probe_ports.end()) {
            probe_ports.push_back(b.port);
            probe_udp.push_back(b.udp);
        }
    }
    const int probe_base = static_cast<int>(model.actions.size());
    for (Port q : probe_ports) {
        model.actions.push_back("Probe-" + machine.id + "-p" + std::to_string(q));
    }
    const int os_detect_action = static_cast<int>(model.actions.size());
    model.actions.push_back("OSDetect-" + machine.id);
    const int exploit_base = static_cast<int>(model.actions.size());
    for (const ExploitAction& e : exploit_actions) model.actions.push_back(e.name);

    // observations
    model.observations.push_back("undetected");
    std::vector<std::string> detect_labels;
    for (const OsCandidate& c : candidates) {
        if (std::find(detect_labels.begin(), detect_labels.end(), c.detect) == detect_labels.end()) {
            detect_labels.push_back(c.detect);
        }
    }
    for (const std::string& label : detect_labels) model.observations.push_back(label);
    const int obs_open = static_cast<int>(model.observations.size());
    model.observations.push_back("open-port");
    model.observations.push_back("closed-port");
    const int obs_agent = obs_open + 2;
    model.observations.push_back("agent-installed");
    model.observations.push_back("no-agent");

    const int S = static_cast<int>(model.states.size());
    const int A = static_cast<int>(model.actions.size());
    const int O = static_cast<int>(model.observations.size());

    model.transition.assign(A, std::vector<std::vector<double>>(S, std::vector<double>(S, 0.0)));
    model.observation.assign(A, std::vector<std::vector<double>>(S, std::vector<double>(O, 0.0)));
    model.reward.assign(A, std::vector<double>(S, 0.0));
    model.export_default_obs.assign(A, 0);

    // decode helpers
    std::vector<int> state_candidate(S, -1);
    std::vector<std::vector<int>> state_statuses(S);
    std::vector<bool> state_is_agent(S, false);
    for (int c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < lattice.config_states[c].size(); ++k) {
            int s = lattice.config_states[c][k];
            state_candidate[s] = c;
            std::vector<int> statuses(B);
            int rest = static_cast<int>(k);
            for (int b = B - 1; b >= 0; --b) {
                statuses[b] = rest % lattice.status_count[c][b];
                rest /= lattice.status_count[c][b];
            }
            state_statuses[s] = std::move(statuses);
        }
        if (lattice.agent_state[c] >= 0) {
            state_candidate[lattice.agent_state[c]] = c;
            state_is_agent[lattice.agent_state[c]] = true;
        }
    }

    auto set_identity = [&](int a) {
        for (int s = 0; s < S; ++s) model.transition[a][s][s] = 1.0;
    };
    auto set_uniform_obs = [&](int a, int obs) {
        for (int s = 0; s < S; ++s) model.observation[a][s][obs] = 1.0;
        model.export_default_obs[a] = obs;
    };

    // Terminate: straight to the terminal state, nothing observed, no reward
    for (int s = 0; s < S; ++s) model.transition[0][s][model.terminal] = 1.0;
    set_uniform_obs(0, 0);

    // Probes: identity transition, deterministic open/closed observation
    for (std::size_t q = 0; q < probe_ports.size(); ++q) {
        int a = probe_base + static_cast<int>(q);
        set_identity(a);
        set_uniform_obs(a, obs_open + 1);  // closed-port by default
        for (int s = 1; s < S; ++s) {
            int c = state_candidate[s];
            bool open = false;
            if (state_is_agent[s]) {
                for (int b = 0; b < B; ++b) {
                    open |= branches[b].port == probe_ports[q] && lattice.vulnerable[c][b];
                }
            } else {
                for (int b = 0; b < B; ++b) {
                    if (branches[b].port != probe_ports[q]) continue;
                    open |= state_statuses[s][b] >= 1;
                }
            }
            if (open) {
                model.observation[a][s][obs_open + 1] = 0.0;
                model.observation[a][s][obs_open] = 1.0;
            }
        }
        double t = probe_udp[q] ? scenario.probe_costs.udp_t : scenario.probe_costs.tcp_t;
        double r = -t - options.detection_scale * options.probe_detection;
        for (int s = 1; s < S; ++s) model.reward[a][s] = r;
    }

    // OS detection: identity transition, deterministic detect label
    set_identity(os_detect_action);
    set_uniform_obs(os_detect_action, 0);  // undetected by default (terminal)
    for (int s = 1; s < S; ++s) {
        int label = model.observation_index(candidates[state_candidate[s]].detect);
        model.observation[os_detect_action][s][0] = 0.0;
        model.observation[os_detect_action][s][label] = 1.0;
    }
    {
        double r = -scenario.probe_costs.os_detect_t -
                   options.detection_scale * options.os_detect_detection;
        for (int s = 1; s < S; ++s) model.reward[os_detect_action][s] = r;
    }

    // Exploits: deterministic given the configuration
    for (std::size_t k = 0; k < exploit_actions.size(); ++k) {
        const ExploitAction& e = exploit_actions[k];
        int a = exploit_base + static_cast<int>(k);
        set_identity(a);
        set_uniform_obs(a, obs_agent + 1);  // no-agent by default
        int vuln_status = lattice.status_count[e.candidate][e.branch] - 1;
        int agent = lattice.agent_state[e.candidate];
        for (int s = 1; s < S; ++s) {
            if (state_candidate[s] != e.candidate || state_is_agent[s]) continue;
            if (state_statuses[s][e.branch] == vuln_status) {
                model.transition[a][s][s] = 0.0;
                model.transition[a][s][agent] = 1.0;
            }
        }
        model.observation[a][agent][obs_agent + 1] = 0.0;
        model.observation[a][agent][obs_agent] = 1.0;

        double r = -e.templ->t - options.detection_scale * options.exploit_detection;
        for (int s = 1; s < S; ++s) {
            model.reward[a][s] = r;
            if (state_candidate[s] == e.candidate && !state_is_agent[s] &&
                state_statuses[s][e.branch] == vuln_status) {
                model.reward[a][s] += options.value_scale * machine.value;
            }
        }
    }

    // initial belief: candidate weight times the per-branch status priors
    model.b0.assign(S, 0.0);
    for (int c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < lattice.config_states[c].size(); ++k) {
            int s = lattice.config_states[c][k];
            double prob = candidates[c].weight;
            for (int b = 0; b < B; ++b) {
                const std::vector<double>& adv = advance[c][b];
                int status = state_statuses[s][b];
                for (int j = 0; j < status; ++j) prob *= adv[j];
                if (status < static_cast<int>(adv.size())) prob *= 1.0 - adv[status];
            }
            model.b0[s] = prob;
        }
    }
    double mass = 0.0;
    for (double x : model.b0) mass += x;
    for (double& x : model.b0) x /= mass;

    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Cassandra-style export / parse

std::string export_cassandra(const PomdpModel& model) {
    std::ostringstream out;
    out << "discount: " << fmt(model.discount) << "\n";
    out << "values: reward\n";
    out << "states:";
    for (const std::string& s : model.states) out << ' ' << s;
    out << "\n";
    out << "actions:";
    for (const std::string& a : model.actions) out << ' ' << a;
    out << "\n";
    out << "observations:";
    for (const std::string& o : model.observations) out << ' ' << o;
    out << "\n";
    if (!model.b0.empty()) {
        out << "start:";
        for (double x : model.b0) out << ' ' << fmt(x);
        out << "\n";
    }

    const int S = static_cast<int>(model.states.size());
    const int O = static_cast<int>(model.observations.size());
    for (std::size_t a = 0; a < model.actions.size(); ++a) {
        const std::string& name = model.actions[a];
        out << "\n";

        // transitions: same point-mass target everywhere, identity with row
        // overrides, or the full listing
        int common_target = -1;
        bool all_point = true;
        for (int s = 0; s < S && all_point; ++s) {
            int target = -1;
            for (int s2 = 0; s2 < S; ++s2) {
                if (model.transition[a][s][s2] == 1.0 && target == -1) {
                    target = s2;
                } else if (model.transition[a][s][s2] != 0.0) {
                    target = -2;
                    break;
                }
            }
            if (target < 0) {
                all_point = false;
            } else if (common_target == -1) {
                common_target = target;
            } else if (common_target != target) {
                all_point = false;
            }
        }
        if (all_point && common_target >= 0 && S > 1) {
            bool identity_like = true;
            for (int s = 0; s < S; ++s) {
                if (model.transition[a][s][s] != 1.0) identity_like = false;
            }
            if (identity_like) {
                out << "T: " << name << " identity\n";
            } else {
                out << "T: " << name << ": * : " << model.states[common_target] << " 1\n";
            }
        } else {
            std::vector<int> diff_rows;
            for (int s = 0; s < S; ++s) {
                for (int s2 = 0; s2 < S; ++s2) {
                    double expected = s == s2 ? 1.0 : 0.0;
                    if (model.transition[a][s][s2] != expected) {
                        diff_rows.push_back(s);
                        break;
                    }
                }
            }
            out << "T: " << name << " identity\n";
            for (int s : diff_rows) {
                out << "T: " << name << ": " << model.states[s] << " : * 0\n";
                for (int s2 = 0; s2 < S; ++s2) {
                    if (model.transition[a][s][s2] != 0.0) {
                        out << "T: " << name << ": " << model.states[s] << " : "
                            << model.states[s2] << " " << fmt(model.transition[a][s][s2]) << "\n";
                    }
                }
            }
        }

        // observations: reset, default, then the differing states
        int def = a < model.export_default_obs.size() ? model.export_default_obs[a] : 0;
        out << "O: " << name << ": * : * 0\n";
        out << "O: " << name << ": * : " << model.observations[def] << " 1\n";
        for (int s2 = 0; s2 < S; ++s2) {
            bool is_default = model.observation[a][s2][def] == 1.0;
            if (is_default) continue;
            bool point_mass = false;
            for (int o = 0; o < O; ++o) point_mass |= model.observation[a][s2][o] == 1.0;
            if (!point_mass && model.observation[a][s2][def] == 0.0) {
                // stochastic row: retract the default entry explicitly
                out << "O: " << name << ": " << model.states[s2] << " : "
                    << model.observations[def] << " 0\n";
            }
            for (int o = 0; o < O; ++o) {
                if (model.observation[a][s2][o] != 0.0) {
                    out << "O: " << name << ": " << model.states[s2] << " : "
                        << model.observations[o] << " " << fmt(model.observation[a][s2][o])
                        << "\n";
                }
            }
        }

        // rewards: wildcard the most common value, list the rest
        std::unordered_map<double, int> counts;
        for (int s = 0; s < S; ++s) ++counts[model.reward[a][s]];
        double common = 0.0;
        int best = -1;
        for (int s = 0; s < S; ++s) {
            double v = model.reward[a][s];
            if (counts[v] > best || (counts[v] == best && v == 0.0)) {
                best = counts[v];
                common = v;
            }
        }
        if (common != 0.0) {
            out << "R: " << name << ": * : * : * " << fmt(common) << "\n";
        }
        for (int s = 0; s < S; ++s) {
            if (model.reward[a][s] != common) {
                out << "R: " << name << ": " << model.states[s] << " : * : * "
                    << fmt(model.reward[a][s]) << "\n";
            }
        }
    }
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

std::vector<std::string> split_colons(const std::string& s) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(':', start);
        if (pos == std::string::npos) {
            fields.push_back(trim(s.substr(start)));
            break;
        }
        fields.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

std::vector<int> expand(const std::string& field, const std::vector<std::string>& names, int line) {
    if (field == "*") {
        std::vector<int> all(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) all[i] = static_cast<int>(i);
        return all;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == field) return {static_cast<int>(i)};
    }
    throw ParseError("unknown name '" + field + "'", line, 1);
}

double parse_value(const std::string& text, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number '" + text + "'", line, 1);
    }
}

}  // namespace

PomdpModel parse_cassandra(const std::string& text) {
    PomdpModel model;
    model.terminal = -1;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool sized = false;

    auto ensure_sized = [&](int at_line, bool for_matrix_line = true) {
        if (sized) return;
        if (for_matrix_line &&
            (model.states.empty() || model.actions.empty() || model.observations.empty())) {
            throw ParseError("matrix line before states/actions/observations", at_line, 1);
        }
        const std::size_t S = model.states.size();
        model.transition.assign(model.actions.size(),
                                std::vector<std::vector<double>>(S, std::vector<double>(S, 0.0)));
        model.observation.assign(
            model.actions.size(),
            std::vector<std::vector<double>>(S, std::vector<double>(model.observations.size(), 0.0)));
        model.reward.assign(model.actions.size(), std::vector<double>(S, 0.0));
        for (std::size_t i = 0; i < S; ++i) {
            if (model.states[i] == "terminal") model.terminal = static_cast<int>(i);
        }
        sized = true;
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;

        if (t.rfind("discount:", 0) == 0) {
            model.discount = parse_value(trim(t.substr(9)), line_no);
        } else if (t.rfind("values:", 0) == 0) {
            continue;
        } else if (t.rfind("states:", 0) == 0) {
            model.states = split_words(t.substr(7));
        } else if (t.rfind("actions:", 0) == 0) {
            model.actions = split_words(t.substr(8));
        } else if (t.rfind("observations:", 0) == 0) {
            model.observations = split_words(t.substr(13));
        } else if (t.rfind("start:", 0) == 0) {
            model.b0.clear();
            for (const std::string& w : split_words(t.substr(6))) {
                model.b0.push_back(parse_value(w, line_no));
            }
        } else if (t.rfind("T:", 0) == 0) {
            ensure_sized(line_no);
            std::vector<std::string> fields = split_colons(t.substr(2));
            if (fields.size() == 1) {
                // "T: <action> identity|uniform"
                std::vector<std::string> words = split_words(fields[0]);
                if (words.size() != 2) throw ParseError("malformed T line", line_no, 1);
                std::vector<int> acts = expand(words[0], model.actions, line_no);
                for (int a : acts) {
                    const std::size_t S = model.states.size();
                    if (words[1] == "identity") {
                        for (std::size_t s = 0; s < S; ++s) {
                            std::fill(model.transition[a][s].begin(), model.transition[a][s].end(),
                                      0.0);
                            model.transition[a][s][s] = 1.0;
                        }
                    } else if (words[1] == "uniform") {
                        for (std::size_t s = 0; s < S; ++s) {
                            std::fill(model.transition[a][s].begin(), model.transition[a][s].end(),
                                      1.0 / static_cast<double>(S));
                        }
                    } else {
                        throw ParseError("unknown matrix keyword '" + words[1] + "'", line_no, 1);
                    }
                }
            } else if (fields.size() == 3) {
                // "T: <a> : <s> : <s'> <p>"; an entry of exactly 1 pins the
                // whole row, matching the default-then-override idiom
                std::vector<std::string> last = split_words(fields[2]);
                if (last.size() != 2) throw ParseError("malformed T line", line_no, 1);
                double p = parse_value(last[1], line_no);
                bool pin_row = p == 1.0 && last[0] != "*";
                for (int a : expand(fields[0], model.actions, line_no)) {
                    for (int s : expand(fields[1], model.states, line_no)) {
                        if (pin_row) {
                            std::fill(model.transition[a][s].begin(), model.transition[a][s].end(),
                                      0.0);
                        }
                        for (int s2 : expand(last[0], model.states, line_no)) {
                            model.transition[a][s][s2] = p;
                        }
                    }
                }
            } else {
                throw ParseError("malformed T line", line_no, 1);
            }
        } else if (t.rfind("O:", 0) == 0) {
            ensure_sized(line_no);
            std::vector<std::string> fields = split_colons(t.substr(2));
            if (fields.size() != 3) throw ParseError("malformed O line", line_no, 1);
            std::vector<std::string> last = split_words(fields[2]);
            if (last.size() != 2) throw ParseError("malformed O line", line_no, 1);
            double p = parse_value(last[1], line_no);
            bool pin_row = p == 1.0 && last[0] != "*";
            for (int a : expand(fields[0], model.actions, line_no)) {
                for (int s2 : expand(fields[1], model.states, line_no)) {
                    if (pin_row) {
                        std::fill(model.observation[a][s2].begin(), model.observation[a][s2].end(),
                                  0.0);
                    }
                    for (int o : expand(last[0], model.observations, line_no)) {
                        model.observation[a][s2][o] = p;
                    }
                }
            }
        } else if (t.rfind("R:", 0) == 0) {
            ensure_sized(line_no);
            std::vector<std::string> fields = split_colons(t.substr(2));
            if (fields.size() != 4) throw ParseError("malformed R line", line_no, 1);
            std::vector<std::string> last = split_words(fields[3]);
            if (last.size() != 2) throw ParseError("malformed R line", line_no, 1);
            double r = parse_value(last[1], line_no);
            for (int a : expand(fields[0], model.actions, line_no)) {
                for (int s : expand(fields[1], model.states, line_no)) {
                    model.reward[a][s] = r;
                }
            }
        } else {
            throw ParseError("unrecognized line '" + t + "'", line_no, 1);
        }
    }
    ensure_sized(line_no, false);
    model.export_default_obs.assign(model.actions.size(), 0);
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Exact solver over reachable beliefs

namespace {

struct BeliefKey {
    int horizon;
    std::vector<long long> quantized;
    bool operator==(const BeliefKey& other) const = default;
};

struct BeliefKeyHash {
    std::size_t operator()(const BeliefKey& key) const {
        std::size_t h = std::hash<int>()(key.horizon);
        for (long long q : key.quantized) {
            h ^= std::hash<long long>()(q) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

BeliefKey make_key(const BeliefState& b, int horizon) {
    BeliefKey key;
    key.horizon = horizon;
    key.quantized.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        key.quantized[i] = std::llround(b[i] * 1e10);
    }
    return key;
}

struct ExactSolver {
    const PomdpModel& model;
    std::unordered_map<BeliefKey, std::shared_ptr<PolicyNode>, BeliefKeyHash> memo;
    std::size_t guard = 100000;

    std::shared_ptr<PolicyNode> solve(const BeliefState& b, int horizon) {
        if (horizon <= 0) return nullptr;
        if (model.terminal >= 0 && b[model.terminal] >= 1.0 - 1e-12) return nullptr;
        BeliefKey key = make_key(b, horizon);
        auto found = memo.find(key);
        if (found != memo.end()) return found->second;
        if (memo.size() >= guard) {
            throw GuardError("solve_exact: reachable belief set exceeds 100000 nodes");
        }
        memo.emplace(key, nullptr);  // reserve before recursing

        auto best = std::make_shared<PolicyNode>();
        best->value = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < model.actions.size(); ++a) {
            double rho = 0.0;
            for (std::size_t s = 0; s < b.size(); ++s) rho += model.reward[a][s] * b[s];
            BeliefState ba = temporary_belief(model, b, static_cast<int>(a));
            double q = rho;
            std::map<std::string, std::shared_ptr<PolicyNode>> branches;
            for (std::size_t o = 0; o < model.observations.size(); ++o) {
                double po = 0.0;
                for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
                    po += model.observation[a][s2][o] * ba[s2];
                }
                if (po <= 1e-15) continue;
                BeliefState next(ba.size());
                for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
                    next[s2] = model.observation[a][s2][o] * ba[s2] / po;
                }
                std::shared_ptr<PolicyNode> child = solve(next, horizon - 1);
                q += model.discount * po * (child ? child->value : 0.0);
                branches[model.observations[o]] = child;
            }
            if (q > best->value) {
                best->value = q;
                best->action = static_cast<int>(a);
                best->branches = std::move(branches);
            }
        }
        memo[key] = best;
        return best;
    }
};

}  // namespace

SolveResult solve_exact(const PomdpModel& model, int horizon) {
    if (horizon < 0 || horizon > static_cast<int>(model.actions.size())) {
        throw InputError("solve_exact: horizon must be between 0 and the action count");
    }
    model.validate();
    ExactSolver solver{model};
    SolveResult result;
    result.policy = solver.solve(model.b0, horizon);
    result.value = result.policy ? result.policy->value : 0.0;
    result.expanded_beliefs = solver.memo.size();
    return result;
}

double eval_policy(const PomdpModel& model, const PolicyNode& policy, const BeliefState& b,
                   int horizon) {
    if (horizon <= 0 || policy.action < 0) return 0.0;
    int a = policy.action;
    double value = 0.0;
    for (std::size_t s = 0; s < b.size(); ++s) value += model.reward[a][s] * b[s];
    BeliefState ba = temporary_belief(model, b, a);
    for (const auto& [obs, child] : policy.branches) {
        int o = model.observation_index(obs);
        double po = 0.0;
        for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
            po += model.observation[a][s2][o] * ba[s2];
        }
        if (po <= 1e-15 || !child) continue;
        BeliefState next(ba.size());
        for (std::size_t s2 = 0; s2 < ba.size(); ++s2) {
            next[s2] = model.observation[a][s2][o] * ba[s2] / po;
        }
        value += model.discount * po * eval_policy(model, *child, next, horizon - 1);
    }
    return value;
}

namespace {

void format_policy_node(std::ostream& out, const PomdpModel& model, const PolicyNode& node,
                        int depth, int max_depth) {
    if (depth > max_depth) return;
    for (const auto& [obs, child] : node.branches) {
        if (!child || child->action < 0) continue;
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << obs << " -> "
            << model.actions[child->action] << "\n";
        format_policy_node(out, model, *child, depth + 1, max_depth);
    }
}

}  // namespace

std::string format_policy(const PomdpModel& model, const PolicyNode& policy, int max_depth) {
    std::ostringstream out;
    if (policy.action < 0) return "terminate\n";
    out << model.actions[policy.action] << " (value " << fmt(policy.value) << ")\n";
    format_policy_node(out, model, policy, 1, max_depth);
    return out.str();
}

std::string format_belief(const BeliefState& belief) {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < belief.size(); ++i) {
        if (i > 0) out << ", ";
        double x = belief[i];
        bool printed = false;
        if (x == 0.0) {
            out << "0";
            printed = true;
        } else {
            for (int q = 1; q <= 16 && !printed; ++q) {
                double scaled = x * q;
                double rounded = std::round(scaled);
                if (rounded >= 1.0 && std::abs(scaled - rounded) <= 1e-12) {
                    if (q == 1) {
                        out << fmt(rounded);
                    } else {
                        out << fmt(rounded) << "/" << q;
                    }
                    printed = true;
                }
            }
        }
        if (!printed) out << fmt(x);
    }
    out << ")";
    return out.str();
}

}  // namespace aplan::pomdp
