#pragma once

#include <cstdint>

#include "aplan/core.hpp"

namespace aplan::gen {

// Benchmark network: five subnets joined to one main network the attacker
// sits on. Machine types: Windows XP SP3 50%, Windows 2003 SP2 14%,
// Ubuntu 27%, Debian 9%; servers drop one canonical port at random. M
// counts the attacker; E exploits are spread evenly over the M-1 targets,
// so E >= M is required. Deterministic per seed.
Scenario generate_subnet_star(int machines, int exploit_count, std::uint64_t seed);

// Linear chain of subnets: the goal machine sits `depth` exploit hops away
// from the attacker, forcing depth-1 pivots.
Scenario generate_chain(int depth, std::uint64_t seed);

}  // namespace aplan::gen
