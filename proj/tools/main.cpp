// attackplan: batch planner and benchmark driver.
//
// Exit codes: 0 success, 2 input error, 3 infeasible goal, 4 guard refusal.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aplan/bench.hpp"
#include "aplan/graph.hpp"
#include "aplan/oracle.hpp"
#include "aplan/pddl.hpp"
#include "aplan/pomdp.hpp"
#include "aplan/rng.hpp"
#include "aplan/scenario_gen.hpp"
#include "aplan/scenario_io.hpp"
#include "aplan/tree.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitGuard = 4;

int default_threads() {
    if (const char* env = std::getenv("ATTACKPLAN_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

void print_replan_trace(const aplan::Scenario& scenario, const aplan::Plan& plan,
                        std::uint64_t seed) {
    using namespace aplan;
    if (plan.hops.empty()) return;
    const PlanHop& hop = plan.hops.front();
    std::cout << "replan trace for hop " << hop.source << " -> " << hop.target << " (seed " << seed
              << ")\n";
    tree::AttackTree t = tree::build_attack_tree(scenario, hop.source, hop.target);
    SplitMix64 rng = SplitMix64::substream(seed, 0x7e91u);
    for (int round = 0; round < 64; ++round) {
        tree::TreeSolution sol = tree::solve_tree(t);
        if (sol.stats.P == 0.0) {
            std::cout << "  dead end: no remaining providers (P = 0)\n";
            return;
        }
        if (t.assets[t.root].known) break;
        if (sol.plan.empty()) break;
        int node = sol.plan.front();
        bool success = rng.next_double() < t.actions[node].p;
        std::cout << "  T = " << sol.stats.T << " P = " << sol.stats.P << "; execute "
                  << tree::action_display_name(t, t.actions[node]) << " -> "
                  << (success ? "success" : "failure") << "\n";
        t = tree::replan_after(std::move(t), node,
                               success ? tree::Outcome::Success : tree::Outcome::Failure);
        if (success && t.assets[t.root].known) {
            std::cout << "  root asset obtained\n";
            return;
        }
    }
}

int cmd_plan(const std::string& scenario_path, const std::string& goal, const std::string& algorithm,
             const std::string& format, bool replan_trace, bool dump_graph, int threads,
             std::uint64_t seed) {
    using namespace aplan;
    Scenario scenario = io::load_scenario(scenario_path);
    HostId goal_host = goal.empty() && !scenario.goals.empty() ? scenario.goals.front().host : goal;
    if (goal_host.empty()) throw InputError("no goal given and the scenario lists none");

    graph::Algorithm alg =
        algorithm == "floyd" ? graph::Algorithm::FloydWarshall : graph::Algorithm::Dijkstra;
    graph::BuildStats stats;
    Plan plan = graph::plan_attack(scenario, goal_host, alg, &stats, threads);

    if (dump_graph) {
        graph::AssetGraph g = graph::build_asset_graph(scenario);
        std::cout << io::graph_to_json(g);
    }
    std::cout << (format == "json" ? io::plan_to_json(plan) : io::plan_to_text(plan));
    if (replan_trace && plan.feasible()) print_replan_trace(scenario, plan, seed);
    return plan.feasible() ? kExitOk : kExitInfeasible;
}

int cmd_gen(int machines, int exploits, int depth, std::uint64_t seed, const std::string& topology,
            const std::string& out, const std::string& pddl_dir) {
    using namespace aplan;
    Scenario scenario = topology == "chain" ? gen::generate_chain(depth, seed)
                                            : gen::generate_subnet_star(machines, exploits, seed);
    io::save_scenario(scenario, out);
    std::cout << "wrote " << out << " (" << scenario.machines.size() << " machines, "
              << scenario.exploits.size() << " exploits)\n";
    if (!pddl_dir.empty()) {
        pddl::PddlPair pair = pddl::emit_pddl(scenario);
        io::write_file(pddl_dir + "/domain.pddl", pair.domain);
        io::write_file(pddl_dir + "/problem.pddl", pair.problem);
        std::cout << "wrote " << pddl_dir << "/domain.pddl and problem.pddl\n";
    }
    return kExitOk;
}

int cmd_bench(const std::string& machines_list, int repeats, const std::string& csv_path,
              std::uint64_t seed, int threads, double exploit_factor) {
    using namespace aplan;
    std::vector<int> machine_counts;
    std::stringstream in(machines_list);
    std::string item;
    while (std::getline(in, item, ',')) {
        int m = std::atoi(item.c_str());
        if (m < 2) throw InputError("bad machine count: " + item);
        machine_counts.push_back(m);
    }
    if (machine_counts.empty()) throw InputError("empty --machines-list");

    bench::BenchResult result = bench::run_bench(machine_counts, repeats, seed, threads, exploit_factor);
    std::string csv = bench::to_csv(result);
    if (!csv_path.empty()) {
        io::write_file(csv_path, csv);
    } else {
        std::cout << csv;
    }
    if (result.slope_defined) {
        std::cout << "log-log runtime slope over M: " << result.runtime_slope << "\n";
        std::cout << "memory linear-fit R^2: " << result.memory_r2 << "\n";
    } else {
        std::cout << "log-log runtime slope over M: undefined (single point)\n";
    }
    return kExitOk;
}

int cmd_pomdp_export(const std::string& scenario_path, const std::string& source,
                     const std::string& target, int t_days, const std::string& out) {
    using namespace aplan;
    Scenario scenario = io::load_scenario(scenario_path);
    HostId src = source.empty() ? scenario.source : source;
    pomdp::PomdpModel model = pomdp::build_pomdp(scenario, src, target, t_days);
    std::string text = pomdp::export_cassandra(model);
    if (out.empty()) {
        std::cout << text;
    } else {
        io::write_file(out, text);
        std::cout << "wrote " << out << " (" << model.states.size() << " states, "
                  << model.actions.size() << " actions)\n";
    }
    return kExitOk;
}

int cmd_pomdp_solve(const std::string& model_path, const std::string& scenario_path,
                    const std::string& source, const std::string& target, int t_days, int horizon) {
    using namespace aplan;
    pomdp::PomdpModel model;
    if (!model_path.empty()) {
        model = pomdp::parse_cassandra(io::read_file(model_path));
    } else {
        Scenario scenario = io::load_scenario(scenario_path);
        HostId src = source.empty() ? scenario.source : source;
        model = pomdp::build_pomdp(scenario, src, target, t_days);
    }
    if (horizon <= 0) horizon = static_cast<int>(model.actions.size());
    pomdp::SolveResult result = pomdp::solve_exact(model, horizon);
    std::cout << "V(b0) = " << result.value << " (" << result.expanded_beliefs
              << " beliefs expanded)\n";
    if (result.policy) std::cout << pomdp::format_policy(model, *result.policy);
    return kExitOk;
}

int cmd_oracle_check(std::uint64_t seed, std::uint64_t cases) {
    bool ok = aplan::oracle::run_oracle_checks(seed, cases, [](const char* suite,
                                                              const aplan::oracle::CheckReport& r) {
        std::cout << suite << ": " << (r.cases - r.failures) << "/" << r.cases << " ok\n";
    });
    std::cout << (ok ? "all oracle checks passed\n" : "oracle checks FAILED\n");
    return ok ? kExitOk : 1;
}

int cmd_pddl_parse(const std::string& domain_path, const std::string& problem_path) {
    using namespace aplan;
    pddl::PddlDomain domain = pddl::parse_domain(io::read_file(domain_path));
    std::cout << "domain " << domain.name << ": " << domain.actions.size() << " actions, "
              << domain.predicates.size() << " predicates\n";
    for (const pddl::PddlAction& a : domain.actions) {
        std::cout << "  " << a.name;
        if (a.has_cost) std::cout << " cost " << a.cost;
        if (a.has_probability) std::cout << " p " << a.success_probability;
        std::cout << "\n";
    }
    if (!problem_path.empty()) {
        pddl::PddlProblem problem = pddl::parse_problem(io::read_file(problem_path));
        std::cout << "problem " << problem.name << ": " << problem.init.size() << " init atoms\n";
    }
    return kExitOk;
}

int cmd_pddl_emit(const std::string& scenario_path, const std::string& out_dir) {
    using namespace aplan;
    Scenario scenario = io::load_scenario(scenario_path);
    pddl::PddlPair pair = pddl::emit_pddl(scenario);
    io::write_file(out_dir + "/domain.pddl", pair.domain);
    io::write_file(out_dir + "/problem.pddl", pair.problem);
    std::cout << "wrote " << out_dir << "/domain.pddl and problem.pddl\n";
    return kExitOk;
}

int cmd_pddl_solve(const std::string& domain_path, const std::string& problem_path,
                   const std::string& format) {
    using namespace aplan;
    pddl::PddlDomain domain = pddl::parse_domain(io::read_file(domain_path));
    pddl::PddlProblem problem = pddl::parse_problem(io::read_file(problem_path));
    Plan plan = pddl::solve_attack_tree_pddl(domain, problem);
    std::cout << (format == "json" ? io::plan_to_json(plan) : io::plan_to_text(plan));
    return plan.feasible() ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic attack planner"};
    app.require_subcommand(1);

    // plan
    std::string scenario_path;
    std::string goal;
    std::string algorithm = "dijkstra";
    std::string format = "text";
    bool replan_trace = false;
    bool dump_graph = false;
    int threads = default_threads();
    std::uint64_t seed = 1;
    CLI::App* plan = app.add_subcommand("plan", "plan an attack on a scenario file");
    plan->add_option("--scenario", scenario_path, "scenario file")->required();
    plan->add_option("--goal", goal, "goal host (defaults to the scenario goal)");
    plan->add_option("--algorithm", algorithm, "dijkstra|floyd")
        ->check(CLI::IsMember({"dijkstra", "floyd"}));
    plan->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));
    plan->add_flag("--replan-trace", replan_trace, "simulate the first hop with replanning");
    plan->add_flag("--dump-graph", dump_graph, "print the asset graph edge list");
    plan->add_option("--threads", threads, "worker threads for edge evaluation");
    plan->add_option("--seed", seed, "seed for --replan-trace sampling");

    // gen
    int machines = 10;
    int exploits = 20;
    int depth = 4;
    std::uint64_t gen_seed = 1;
    std::string topology = "star";
    std::string out_path = "scenario.json";
    std::string pddl_dir;
    CLI::App* gen = app.add_subcommand("gen", "generate a benchmark scenario");
    gen->add_option("--machines", machines, "machine count (star topology)");
    gen->add_option("--exploits", exploits, "exploit count (star topology)");
    gen->add_option("--depth", depth, "chain length (chain topology)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--topology", topology, "star|chain")->check(CLI::IsMember({"star", "chain"}));
    gen->add_option("--out", out_path, "output scenario file")->required();
    gen->add_option("--pddl", pddl_dir, "also write domain.pddl/problem.pddl to this directory");

    // bench
    std::string machines_list = "100,200,300,400,500";
    int repeats = 1;
    std::string csv_path;
    std::uint64_t bench_seed = 1;
    int bench_threads = default_threads();
    double exploit_factor = 2.0;
    CLI::App* bench_cmd = app.add_subcommand("bench", "planner scaling benchmark");
    bench_cmd->add_option("--machines-list", machines_list, "comma-separated machine counts");
    bench_cmd->add_option("--repeats", repeats, "runs per size (fastest kept)");
    bench_cmd->add_option("--csv", csv_path, "write rows to this CSV file");
    bench_cmd->add_option("--seed", bench_seed, "generator seed");
    bench_cmd->add_option("--threads", bench_threads, "worker threads");
    bench_cmd->add_option("--exploits-factor", exploit_factor, "exploits per machine");

    // pomdp export|solve
    CLI::App* pomdp_cmd = app.add_subcommand("pomdp", "single-pair POMDP tools");
    pomdp_cmd->require_subcommand(1);
    std::string pomdp_scenario;
    std::string pomdp_source;
    std::string pomdp_target;
    int t_days = 0;
    std::string pomdp_out;
    CLI::App* pomdp_export = pomdp_cmd->add_subcommand("export", "write a .pomdp model file");
    pomdp_export->add_option("--scenario", pomdp_scenario, "scenario file")->required();
    pomdp_export->add_option("--source", pomdp_source, "source host (defaults to scenario source)");
    pomdp_export->add_option("--target", pomdp_target, "target host")->required();
    pomdp_export->add_option("--tdays", t_days, "days since the last pentest");
    pomdp_export->add_option("--out", pomdp_out, "output file (stdout when omitted)");

    std::string model_path;
    std::string solve_scenario;
    std::string solve_source;
    std::string solve_target;
    int solve_tdays = 0;
    int horizon = 0;
    CLI::App* pomdp_solve = pomdp_cmd->add_subcommand("solve", "exact desk-scale solve");
    pomdp_solve->add_option("--model", model_path, ".pomdp model file");
    pomdp_solve->add_option("--scenario", solve_scenario, "scenario file (alternative to --model)");
    pomdp_solve->add_option("--source", solve_source, "source host");
    pomdp_solve->add_option("--target", solve_target, "target host");
    pomdp_solve->add_option("--tdays", solve_tdays, "days since the last pentest");
    pomdp_solve->add_option("--horizon", horizon, "policy horizon (defaults to the action count)");

    // oracle check
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "verification oracles");
    oracle_cmd->require_subcommand(1);
    std::string suite = "all";
    std::uint64_t oracle_seed = 7;
    std::uint64_t cases = 1000;
    CLI::App* oracle_check = oracle_cmd->add_subcommand("check", "run planner-vs-oracle properties");
    oracle_check->add_option("--suite", suite, "which suite to run (all)");
    oracle_check->add_option("--seed", oracle_seed, "instance seed");
    oracle_check->add_option("--cases", cases, "instances per suite");

    // pddl parse|emit|solve
    CLI::App* pddl_cmd = app.add_subcommand("pddl", "PDDL ingestion and emission");
    pddl_cmd->require_subcommand(1);
    std::string domain_path;
    std::string problem_path;
    CLI::App* pddl_parse = pddl_cmd->add_subcommand("parse", "parse and summarize PDDL files");
    pddl_parse->add_option("--domain", domain_path, "domain file")->required();
    pddl_parse->add_option("--problem", problem_path, "problem file");

    std::string emit_scenario;
    std::string emit_dir = ".";
    CLI::App* pddl_emit = pddl_cmd->add_subcommand("emit", "scenario to domain/problem PDDL");
    pddl_emit->add_option("--scenario", emit_scenario, "scenario file")->required();
    pddl_emit->add_option("--out-dir", emit_dir, "output directory");

    std::string solve_domain;
    std::string solve_problem;
    std::string solve_format = "text";
    CLI::App* pddl_solve = pddl_cmd->add_subcommand("solve", "solve a ground attack-tree domain");
    pddl_solve->add_option("--domain", solve_domain, "domain file")->required();
    pddl_solve->add_option("--problem", solve_problem, "problem file")->required();
    pddl_solve->add_option("--format", solve_format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed()) {
            return cmd_plan(scenario_path, goal, algorithm, format, replan_trace, dump_graph,
                            threads, seed);
        }
        if (gen->parsed()) {
            return cmd_gen(machines, exploits, depth, gen_seed, topology, out_path, pddl_dir);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(machines_list, repeats, csv_path, bench_seed, bench_threads,
                             exploit_factor);
        }
        if (pomdp_cmd->parsed()) {
            if (pomdp_export->parsed()) {
                return cmd_pomdp_export(pomdp_scenario, pomdp_source, pomdp_target, t_days,
                                        pomdp_out);
            }
            return cmd_pomdp_solve(model_path, solve_scenario, solve_source, solve_target,
                                   solve_tdays, horizon);
        }
        if (oracle_cmd->parsed()) return cmd_oracle_check(oracle_seed, cases);
        if (pddl_cmd->parsed()) {
            if (pddl_parse->parsed()) return cmd_pddl_parse(domain_path, problem_path);
            if (pddl_emit->parsed()) return cmd_pddl_emit(emit_scenario, emit_dir);
            return cmd_pddl_solve(solve_domain, solve_problem, solve_format);
        }
    } catch (const aplan::GuardError& e) {
        std::cerr << "guard refusal: " << e.what() << "\n";
        return kExitGuard;
    } catch (const aplan::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitInput;
    } catch (const aplan::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
