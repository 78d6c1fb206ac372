#include "coagents/brute_force.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace coagents {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum-distance depot-to-depot route over exactly the customers in mask.
// Bit i of mask is customer id i+1. Returns kInf when no ordering is feasible.
struct RouteTable {
    std::vector<double> cost;
    std::vector<std::vector<int>> order;
};

RouteTable route_costs_cvrp(const ProblemInstance& inst) {
    const int n = inst.n();
    const int full = 1 << n;
    // Held-Karp: dp[mask][last] = min distance depot -> ... -> last covering mask
    std::vector<std::vector<double>> dp(full, std::vector<double>(n, kInf));
    std::vector<std::vector<int>> par(full, std::vector<int>(n, -1));
    for (int i = 0; i < n; ++i) dp[1 << i][i] = inst.dist(0, i + 1);
    for (int mask = 1; mask < full; ++mask)
        for (int last = 0; last < n; ++last) {
            if (!(mask & (1 << last)) || dp[mask][last] == kInf) continue;
            for (int nxt = 0; nxt < n; ++nxt) {
                if (mask & (1 << nxt)) continue;
                const int m2 = mask | (1 << nxt);
                const double c = dp[mask][last] + inst.dist(last + 1, nxt + 1);
                if (c < dp[m2][nxt]) {
                    dp[m2][nxt] = c;
                    par[m2][nxt] = last;
                }
            }
        }
    RouteTable t;
    t.cost.assign(full, kInf);
    t.order.assign(full, {});
    for (int mask = 1; mask < full; ++mask) {
        int best_last = -1;
        double best = kInf;
        for (int last = 0; last < n; ++last) {
            if (!(mask & (1 << last)) || dp[mask][last] == kInf) continue;
            const double c = dp[mask][last] + inst.dist(last + 1, 0);
            if (c < best) {
                best = c;
                best_last = last;
            }
        }
        if (best_last < 0) continue;
        t.cost[mask] = best;
        std::vector<int> rev;
        int m = mask, last = best_last;
        while (last >= 0) {
            rev.push_back(last + 1);
            const int p = par[m][last];
            m ^= 1 << last;
            last = p;
        }
        std::reverse(rev.begin(), rev.end());
        t.order[mask] = std::move(rev);
    }
    return t;
}

bool tw_route_feasible(const std::vector<int>& order, const ProblemInstance& inst, double* dist_out) {
    double t = inst.depot_early(), dist = 0.0;
    int prev = 0;
    for (int id : order) {
        const Customer& c = inst.customer(id);
        const double arrival = t + inst.dist(prev, id);
        if (arrival > c.tw_late) return false;
        dist += inst.dist(prev, id);
        t = std::max(arrival, c.tw_early) + c.service;
        prev = id;
    }
    if (t + inst.dist(prev, 0) > inst.depot_late()) return false;
    *dist_out = dist + inst.dist(prev, 0);
    return true;
}

RouteTable route_costs_vrptw(const ProblemInstance& inst) {
    const int n = inst.n();
    const int full = 1 << n;
    RouteTable t;
    t.cost.assign(full, kInf);
    t.order.assign(full, {});
    for (int mask = 1; mask < full; ++mask) {
        std::vector<int> ids;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) ids.push_back(i + 1);
        std::sort(ids.begin(), ids.end());
        do {
            double d;
            if (tw_route_feasible(ids, inst, &d) && d < t.cost[mask]) {
                t.cost[mask] = d;
                t.order[mask] = ids;
            }
        } while (std::next_permutation(ids.begin(), ids.end()));
    }
    return t;
}

}  // namespace

Solution brute_force_optimum(const ProblemInstance& inst) {
    const int n = inst.n();
    if (n > 10)
        throw std::invalid_argument("brute_force_optimum: limited to n <= 10 (got n = " +
                                    std::to_string(n) + ")");
    const int full = 1 << n;

    std::vector<int> demand(full, 0);
    for (int mask = 1; mask < full; ++mask) {
        const int low = mask & -mask;
        demand[mask] = demand[mask ^ low] + inst.customer(__builtin_ctz(low) + 1).demand;
    }

    RouteTable routes = inst.variant() == Variant::CVRP ? route_costs_cvrp(inst)
                                                        : route_costs_vrptw(inst);
    for (int mask = 1; mask < full; ++mask)
        if (demand[mask] > inst.capacity()) routes.cost[mask] = kInf;

    // partition DP; every block contains the lowest remaining customer so each
    // partition is enumerated once
    std::vector<double> best(full, kInf);
    std::vector<int> choice(full, 0);
    best[0] = 0.0;
    for (int mask = 1; mask < full; ++mask) {
        const int low = mask & -mask;
        for (int sub = mask; sub > 0; sub = (sub - 1) & mask) {
            if (!(sub & low) || routes.cost[sub] == kInf) continue;
            const double c = routes.cost[sub] + best[mask ^ sub];
            if (c < best[mask]) {
                best[mask] = c;
                choice[mask] = sub;
            }
        }
    }
    if (best[full - 1] == kInf)
        throw std::runtime_error("brute_force_optimum: no feasible route partition exists");

    std::vector<std::vector<int>> sol_routes;
    for (int mask = full - 1; mask != 0; mask ^= choice[mask])
        sol_routes.push_back(routes.order[choice[mask]]);
    return make_solution(std::move(sol_routes), inst);
}

}  // namespace coagents
