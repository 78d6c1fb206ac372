#pragma once

// Slow reference implementations that unit and acceptance tests compare the
// library against. Everything here is written the obvious way — full
// re-evaluation, explicit enumeration, dense matrix powers, central finite
// differences — so a bug would have to appear twice, in two unrelated forms,
// to slip through.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "coagents/psg.hpp"
#include "coagents/tensor.hpp"
#include "coagents/vrp.hpp"

namespace oracle {

struct NaiveEval {
    double distance = 0.0;
    double lateness = 0.0;
    double capacity_excess = 0.0;
    bool covering = false;  // every customer exactly once
    bool feasible = false;
};

// From-scratch route evaluation: walk each route with a clock, sum distance,
// lateness past windows (including the depot return), and demand overflow.
inline NaiveEval naive_eval(const std::vector<std::vector<int>>& routes,
                            const coagents::ProblemInstance& inst) {
    NaiveEval out;
    std::vector<int> count(static_cast<std::size_t>(inst.n()) + 1, 0);
    const bool timed = inst.variant() == coagents::Variant::VRPTW;
    for (const auto& r : routes) {
        int prev = 0, load = 0;
        double clock = inst.depot_early();
        for (int id : r) {
            ++count[static_cast<std::size_t>(id)];
            const coagents::Customer& c = inst.customer(id);
            out.distance += inst.dist(prev, id);
            load += c.demand;
            if (timed) {
                clock += inst.dist(prev, id);
                if (clock > c.tw_late) out.lateness += clock - c.tw_late;
                if (clock < c.tw_early) clock = c.tw_early;
                clock += c.service;
            }
            prev = id;
        }
        out.distance += inst.dist(prev, 0);
        if (timed) {
            clock += inst.dist(prev, 0);
            if (clock > inst.depot_late()) out.lateness += clock - inst.depot_late();
        }
        if (load > inst.capacity()) out.capacity_excess += load - inst.capacity();
    }
    out.covering = true;
    for (int id = 1; id <= inst.n(); ++id)
        if (count[static_cast<std::size_t>(id)] != 1) out.covering = false;
    out.feasible = out.covering && out.lateness == 0.0 && out.capacity_excess == 0.0;
    return out;
}

// Cheapest feasible ordering of one customer subset as a single route, by
// plain permutation enumeration; +inf when no ordering is feasible.
inline double best_route_by_permutation(std::vector<int> block,
                                        const coagents::ProblemInstance& inst) {
    std::sort(block.begin(), block.end());
    int demand = 0;
    for (int id : block) demand += inst.customer(id).demand;
    if (demand > inst.capacity()) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    do {
        const NaiveEval e = naive_eval({block}, inst);
        if (e.lateness == 0.0 && e.distance < best) best = e.distance;
    } while (std::next_permutation(block.begin(), block.end()));
    return best;
}

// Exact optimum by exhausting every partition of the customers into routes.
// Blocks are generated recursively (always extending the block containing the
// lowest unplaced customer, so each partition appears once); per-block costs
// come from best_route_by_permutation, memoized per subset bitmask.
inline double enumerate_optimum(const coagents::ProblemInstance& inst) {
    const int n = inst.n();
    std::map<std::uint32_t, double> block_cost;
    auto cost_of = [&](std::uint32_t mask) {
        auto it = block_cost.find(mask);
        if (it != block_cost.end()) return it->second;
        std::vector<int> block;
        for (int id = 1; id <= n; ++id)
            if (mask & (1u << id)) block.push_back(id);
        const double c = best_route_by_permutation(block, inst);
        block_cost.emplace(mask, c);
        return c;
    };

    double best = std::numeric_limits<double>::infinity();
    const std::uint32_t all = ((1u << n) - 1u) << 1;  // bits 1..n
    std::function<void(std::uint32_t, double)> rec = [&](std::uint32_t remaining, double acc) {
        if (remaining == 0) {
            best = std::min(best, acc);
            return;
        }
        // the block containing the lowest remaining customer
        int low = 1;
        while (!(remaining & (1u << low))) ++low;
        const std::uint32_t rest = remaining & ~(1u << low);
        // enumerate subsets of `rest` joining `low`
        std::uint32_t sub = rest;
        while (true) {
            const std::uint32_t blockmask = sub | (1u << low);
            const double c = cost_of(blockmask);
            if (std::isfinite(c)) rec(remaining & ~blockmask, acc + c);
            if (sub == 0) break;
            sub = (sub - 1) & rest;
        }
    };
    rec(all, 0.0);
    return best;
}

// Return probabilities of the d-step random walk on the symmetrized view
// adjacency, computed with dense matrix powers: row i = ((T^1)_ii .. (T^d)_ii)
// with T = D^{-1} A. Isolated nodes keep all-zero rows.
inline std::vector<std::vector<double>> walk_returns_dense(const coagents::SubgraphView& view,
                                                           int d) {
    const std::size_t k = view.node_ids.size();
    std::vector<double> A(k * k, 0.0);
    for (const auto& e : view.edges) {
        const auto s = static_cast<std::size_t>(e[0]), t = static_cast<std::size_t>(e[1]);
        A[s * k + t] = 1.0;
        A[t * k + s] = 1.0;
    }
    std::vector<double> T(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < k; ++j) deg += A[i * k + j];
        if (deg > 0.0)
            for (std::size_t j = 0; j < k; ++j) T[i * k + j] = A[i * k + j] / deg;
    }
    std::vector<std::vector<double>> out(k, std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<double> P = T, next(k * k);
    for (int step = 0; step < d; ++step) {
        for (std::size_t i = 0; i < k; ++i) out[i][static_cast<std::size_t>(step)] = P[i * k + i];
        if (step + 1 == d) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t l = 0; l < k; ++l) {
                const double a = P[i * k + l];
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < k; ++j) next[i * k + j] += a * T[l * k + j];
            }
        std::swap(P, next);
    }
    return out;
}

// Central-difference gradient of a scalar-valued rebuild at one coordinate of
// a parameter that the rebuild reads.
inline double central_diff(const std::function<double()>& f, double& x, double h) {
    const double keep = x;
    x = keep + h;
    const double up = f();
    x = keep - h;
    const double down = f();
    x = keep;
    return (up - down) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

// Random covering partition of 1..n into up to max_routes ordered routes;
// may be capacity- or window-infeasible on purpose.
inline std::vector<std::vector<int>> random_routes(int n, coagents::Rng& rng,
                                                   int max_routes = 3) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    rng.shuffle(ids);
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_routes)));
    std::vector<std::vector<int>> routes(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ids.size(); ++i)
        routes[rng.index(routes.size())].push_back(ids[i]);
    routes.erase(std::remove_if(routes.begin(), routes.end(),
                                [](const std::vector<int>& r) { return r.empty(); }),
                 routes.end());
    return routes;
}

}  // namespace oracle
