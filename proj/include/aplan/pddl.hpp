#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aplan/core.hpp"

namespace aplan::pddl {

// Parsed s-expression. Lexemes are kept verbatim so emission reproduces
// the token stream of the input exactly.
struct SExpr {
    enum class Kind { List, Symbol, Keyword, Variable, Number };
    Kind kind = Kind::List;
    std::string text;
    double number = 0.0;
    std::vector<SExpr> items;
    int line = 0;
    int column = 0;

    bool is_symbol(const std::string& name) const;  // case-insensitive
    const SExpr& head() const;

    static SExpr symbol(std::string name);
    static SExpr list(std::vector<SExpr> items);
};

struct TypedName {
    std::string name;
    std::string type;  // empty when untyped
};

struct PddlPredicate {
    std::string name;
    std::vector<TypedName> parameters;
};

struct PddlAction {
    std::string name;
    std::vector<TypedName> parameters;
    bool has_parameters = false;
    double success_probability = 1.0;  // :success-probability extension
    bool has_probability = false;
    std::optional<SExpr> precondition;
    std::optional<SExpr> effect;

    // interpreted views
    std::vector<SExpr> precondition_atoms;  // flattened conjuncts (exists kept whole)
    std::vector<SExpr> effect_atoms;        // added predicates
    double cost = 0.0;                      // sum of (increase (time|cost) n)
    bool has_cost = false;
};

struct PddlDomain {
    std::string name;
    std::vector<std::string> requirements;  // verbatim keywords
    std::vector<TypedName> types;
    std::vector<TypedName> constants;
    std::vector<PddlPredicate> predicates;
    std::vector<std::string> functions;
    std::vector<PddlAction> actions;
    bool has_predicates = false;
    bool has_functions = false;

    const PddlAction* find_action(const std::string& name) const;
};

struct PddlProblem {
    std::string name;
    std::string domain;
    std::vector<TypedName> objects;
    std::vector<SExpr> init;  // atoms and (= (fluent) value) assignments
    std::optional<SExpr> goal;
    std::optional<SExpr> metric;  // e.g. (MINIMIZE (cost)), direction kept verbatim
};

// Parsers for the supported subset; anything outside raises ParseError
// with line and column.
PddlDomain parse_domain(const std::string& text);
PddlProblem parse_problem(const std::string& text);

std::string emit_domain(const PddlDomain& domain);
std::string emit_problem(const PddlProblem& problem);

// Token stream of a PDDL text (for whitespace-insensitive comparisons).
std::vector<std::string> tokenize(const std::string& text);

struct PddlPair {
    std::string domain;
    std::string problem;
};

// The scenario -> PDDL transform: plumbing actions, one action per catalog
// exploit, machines described through the connectivity and OS predicates.
PddlPair emit_pddl(const Scenario& scenario);

// Inverse transform: rebuilds a scenario from an emitted pair.
Scenario scenario_from_pddl(const PddlDomain& domain, const PddlProblem& problem);

// Goal-regression attack-tree solving for ground (parameter-free) domains.
// Actions default to p = 1; when the domain declares no functions, every
// action costs 1 (plan-length metric). Cyclic asset lattices are rejected.
Plan solve_attack_tree_pddl(const PddlDomain& domain, const PddlProblem& problem);

}  // namespace aplan::pddl
