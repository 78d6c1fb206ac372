#pragma once

#include "coagents/vrp.hpp"

namespace coagents {

// Exact minimum-distance solution for n <= 10 (throws std::invalid_argument
// above that). Per customer subset the best single route is found by
// Held-Karp (CVRP) or by feasibility-checked permutation enumeration (VRPTW,
// hard windows); a set-partition DP then assembles the optimal route set.
// Throws std::runtime_error if no feasible partition exists.
Solution brute_force_optimum(const ProblemInstance& inst);

}  // namespace coagents
