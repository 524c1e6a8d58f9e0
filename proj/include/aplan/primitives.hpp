#pragma once

#include <span>
#include <vector>

#include "aplan/errors.hpp"

namespace aplan::prim {

enum class GroupKind { Or, And };

// Compound expected cost and success probability of an action sequence.
struct SeqStats {
    double T = 0.0;
    double P = 0.0;
};

// A (cost, probability) pair with a stable index used for deterministic
// tie-breaking. `id` is the position in the caller's original list.
struct Rated {
    double t = 0.0;
    double p = 1.0;
    int id = 0;
};

// Strict t1/p1 < t2/p2 by cross-multiplication; a zero denominator is an
// infinite ratio. Exact for exactly representable inputs.
inline bool ratio_less(double t1, double p1, double t2, double p2) {
    if (p1 == 0.0) return false;
    if (p2 == 0.0) return true;
    return t1 * p2 < t2 * p1;
}

void validate(std::span<const Rated> actions);  // throws InputError

// Expected cost and success probability of executing an OR group in the
// given order (stop at the first success):
//   T = t1 + q1 t2 + q1 q2 t3 + ...   (qi = 1 - pi)
//   P = 1 - prod qi
// Empty sequence: (0, 0) -- an empty OR never succeeds.
SeqStats seq_stats_or(std::span<const Rated> ordered);

// Same for an AND group (stop at the first failure):
//   T = t1 + p1 t2 + p1 p2 t3 + ...
//   P = prod pi
// Empty sequence: (0, 1) -- an empty AND vacuously succeeds.
SeqStats seq_stats_and(std::span<const Rated> ordered);

// Optimal execution order for alternatives: ascending t/p, stable on ties.
// Actions with p = 0 are pruned; they cost time and can never succeed.
std::vector<Rated> choose_order(std::vector<Rated> actions);

struct AndOrder {
    std::vector<Rated> order;
    bool dead = false;  // some member has p = 0, so the group cannot succeed
};

// Optimal execution order within an AND group: ascending t/(1-p); members
// with p = 1 sort last (their ratio is infinite).
AndOrder and_order(std::vector<Rated> actions);

// A reduced group usable as a single action in a parent group.
struct PseudoAction {
    SeqStats stats;
    std::vector<int> internal_order;  // caller ids in execution order
    GroupKind group_kind = GroupKind::Or;
    bool dead = false;
};

// Orders the members (choose_order / and_order) and evaluates the
// sequence stats.
PseudoAction combine_group(GroupKind kind, std::vector<Rated> actions);

}  // namespace aplan::prim
