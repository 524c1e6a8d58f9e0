#pragma once

#include <string>

#include "aplan/core.hpp"
#include "aplan/graph.hpp"

namespace aplan::io {

// Native scenario document (JSON): top-level keys `machines`, `subnets`,
// `exploits`, `source`, `goals`, plus the optional `known`, `probe-costs`
// and per-machine `uncertainty` extensions. Schema in docs/scenario-format.md.
Scenario scenario_from_string(const std::string& text);
std::string scenario_to_string(const Scenario& scenario);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

std::string plan_to_json(const Plan& plan);
// Numbered-step listing, one action per line.
std::string plan_to_text(const Plan& plan);

// Edge list with (time, prob) labels, for debugging.
std::string graph_to_json(const graph::AssetGraph& graph);

// Annotated attack-tree dump: every node with its reduced (T, P) and the
// computed execution orders, for golden tests and debugging.
std::string tree_to_json(const tree::AttackTree& t, const tree::TreeSolution& solution);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace aplan::io
