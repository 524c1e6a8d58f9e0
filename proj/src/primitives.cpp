#include "aplan/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aplan::prim {

void validate(std::span<const Rated> actions) {
    for (const Rated& a : actions) {
        if (!(a.p >= 0.0 && a.p <= 1.0) || !std::isfinite(a.p)) {
            throw InputError("probability out of [0,1] at index " + std::to_string(a.id));
        }
        if (!(a.t >= 0.0) || !std::isfinite(a.t)) {
            throw InputError("negative or non-finite cost at index " + std::to_string(a.id));
        }
    }
}

SeqStats seq_stats_or(std::span<const Rated> ordered) {
    validate(ordered);
    double T = 0.0;
    double reach = 1.0;  // probability all previous attempts failed
    for (const Rated& a : ordered) {
        T += reach * a.t;
        reach *= 1.0 - a.p;
    }
    return {T, ordered.empty() ? 0.0 : 1.0 - reach};
}

SeqStats seq_stats_and(std::span<const Rated> ordered) {
    validate(ordered);
    double T = 0.0;
    double alive = 1.0;  // probability all previous actions succeeded
    for (const Rated& a : ordered) {
        T += alive * a.t;
        alive *= a.p;
    }
    return {T, alive};
}

std::vector<Rated> choose_order(std::vector<Rated> actions) {
    validate(actions);
    std::erase_if(actions, [](const Rated& a) { return a.p == 0.0; });
    std::stable_sort(actions.begin(), actions.end(), [](const Rated& a, const Rated& b) {
        if (ratio_less(a.t, a.p, b.t, b.p)) return true;
        if (ratio_less(b.t, b.p, a.t, a.p)) return false;
        return a.id < b.id;
    });
    return actions;
}

AndOrder and_order(std::vector<Rated> actions) {
    validate(actions);
    AndOrder result;
    result.dead = std::any_of(actions.begin(), actions.end(), [](const Rated& a) { return a.p == 0.0; });
    std::stable_sort(actions.begin(), actions.end(), [](const Rated& a, const Rated& b) {
        if (ratio_less(a.t, 1.0 - a.p, b.t, 1.0 - b.p)) return true;
        if (ratio_less(b.t, 1.0 - b.p, a.t, 1.0 - a.p)) return false;
        return a.id < b.id;
    });
    result.order = std::move(actions);
    return result;
}

PseudoAction combine_group(GroupKind kind, std::vector<Rated> actions) {
    PseudoAction group;
    group.group_kind = kind;
    if (kind == GroupKind::Or) {
        std::vector<Rated> ordered = choose_order(std::move(actions));
        group.stats = seq_stats_or(ordered);
        group.dead = ordered.empty();
        for (const Rated& a : ordered) group.internal_order.push_back(a.id);
    } else {
        AndOrder ordered = and_order(std::move(actions));
        group.stats = seq_stats_and(ordered.order);
        group.dead = ordered.dead;
        for (const Rated& a : ordered.order) group.internal_order.push_back(a.id);
    }
    return group;
}

}  // namespace aplan::prim
