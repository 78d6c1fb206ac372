#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "coagents/search.hpp"

namespace coagents {

namespace {

const char* kDestroyNames[3] = {"random", "worst", "shaw"};
const char* kRepairNames[2] = {"greedy", "regret2"};

// distance + soft penalties of a single route, mirroring evaluate()
double route_cost(const std::vector<int>& route, const ProblemInstance& inst) {
    if (route.empty()) return 0.0;
    double dcost = 0.0, lateness = 0.0;
    int load = 0, prev = 0;
    double t = inst.depot_early();
    for (int id : route) {
        const Customer& c = inst.customer(id);
        load += c.demand;
        dcost += inst.dist(prev, id);
        if (inst.variant() == Variant::VRPTW) {
            const double arrival = t + inst.dist(prev, id);
            if (arrival > c.tw_late) lateness += arrival - c.tw_late;
            t = std::max(arrival, c.tw_early) + c.service;
        }
        prev = id;
    }
    dcost += inst.dist(prev, 0);
    if (inst.variant() == Variant::VRPTW) {
        const double back = t + inst.dist(prev, 0);
        if (back > inst.depot_late()) lateness += back - inst.depot_late();
    }
    const double excess = std::max(0.0, static_cast<double>(load - inst.capacity()));
    return dcost + kInfeasiblePenalty * (lateness + excess);
}

std::vector<int> covered_customers(const std::vector<std::vector<int>>& routes) {
    std::vector<int> out;
    for (const auto& r : routes) out.insert(out.end(), r.begin(), r.end());
    std::sort(out.begin(), out.end());
    return out;
}

void erase_customer(std::vector<std::vector<int>>& routes, int id) {
    for (auto& r : routes) {
        auto it = std::find(r.begin(), r.end(), id);
        if (it != r.end()) {
            r.erase(it);
            break;
        }
    }
    routes.erase(std::remove_if(routes.begin(), routes.end(),
                                [](const std::vector<int>& r) { return r.empty(); }),
                 routes.end());
}

// biased pick from a list sorted best-first: index = floor(|L| * u^3)
std::size_t biased_index(std::size_t size, Rng& rng) {
    const double u = rng.uniform();
    auto idx = static_cast<std::size_t>(static_cast<double>(size) * u * u * u);
    return std::min(idx, size - 1);
}

std::vector<int> destroy(int op, std::vector<std::vector<int>>& routes, int q,
                         const ProblemInstance& inst, Rng& rng) {
    std::vector<int> removed;
    if (op == 0) {  // random removal
        std::vector<int> pool = covered_customers(routes);
        rng.shuffle(pool);
        for (int i = 0; i < q && i < static_cast<int>(pool.size()); ++i) {
            removed.push_back(pool[i]);
            erase_customer(routes, pool[i]);
        }
    } else if (op == 1) {  // worst removal: largest single-customer detour first
        for (int round = 0; round < q; ++round) {
            std::vector<std::pair<double, int>> gain;  // (saved cost, id)
            for (const auto& r : routes) {
                for (std::size_t i = 0; i < r.size(); ++i) {
                    std::vector<int> without(r);
                    without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
                    gain.emplace_back(route_cost(r, inst) - route_cost(without, inst), r[i]);
                }
            }
            if (gain.empty()) break;
            std::sort(gain.begin(), gain.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            const int id = gain[biased_index(gain.size(), rng)].second;
            removed.push_back(id);
            erase_customer(routes, id);
        }
    } else {  // related (Shaw) removal: grow a cluster of similar customers
        std::vector<int> pool = covered_customers(routes);
        if (pool.empty()) return removed;
        double maxd = 1e-12;
        for (int a : pool)
            for (int b : pool) maxd = std::max(maxd, inst.dist(a, b));
        const double cap = std::max(inst.capacity(), 1);
        const int seed_id = pool[rng.index(pool.size())];
        removed.push_back(seed_id);
        erase_customer(routes, seed_id);
        while (static_cast<int>(removed.size()) < q) {
            std::vector<int> rest = covered_customers(routes);
            if (rest.empty()) break;
            const int ref = removed[rng.index(removed.size())];
            std::vector<std::pair<double, int>> rel;  // (similarity distance, id)
            for (int c : rest)
                rel.emplace_back(inst.dist(ref, c) / maxd +
                                     std::abs(inst.customer(ref).demand -
                                              inst.customer(c).demand) /
                                         cap,
                                 c);
            std::sort(rel.begin(), rel.end());
            const int id = rel[biased_index(rel.size(), rng)].second;
            removed.push_back(id);
            erase_customer(routes, id);
        }
    }
    return removed;
}

struct Insertion {
    double cost = 0.0;
    int route = -1;  // routes.size() = open a fresh route
    int pos = 0;
};

// cheapest and second-cheapest placements of `id` over all routes + a new one
std::pair<Insertion, Insertion> best_insertions(const std::vector<std::vector<int>>& routes,
                                                int id, const ProblemInstance& inst) {
    constexpr double kInf = 1e300;
    Insertion b1{kInf, -1, 0}, b2{kInf, -1, 0};
    auto offer = [&](double cost, int route, int pos) {
        if (cost < b1.cost) {
            b2 = b1;
            b1 = {cost, route, pos};
        } else if (cost < b2.cost) {
            b2 = {cost, route, pos};
        }
    };
    for (std::size_t r = 0; r < routes.size(); ++r) {
        const double base = route_cost(routes[r], inst);
        for (std::size_t p = 0; p <= routes[r].size(); ++p) {
            std::vector<int> with(routes[r]);
            with.insert(with.begin() + static_cast<std::ptrdiff_t>(p), id);
            offer(route_cost(with, inst) - base, static_cast<int>(r), static_cast<int>(p));
        }
    }
    offer(route_cost({id}, inst), static_cast<int>(routes.size()), 0);
    return {b1, b2};
}

void apply_insertion(std::vector<std::vector<int>>& routes, int id, const Insertion& ins) {
    if (ins.route == static_cast<int>(routes.size())) routes.push_back({id});
    else routes[ins.route].insert(routes[ins.route].begin() + ins.pos, id);
}

void repair(int op, std::vector<std::vector<int>>& routes, std::vector<int> removed,
            const ProblemInstance& inst) {
    std::sort(removed.begin(), removed.end());
    while (!removed.empty()) {
        std::size_t pick = 0;
        Insertion where;
        double best_key = 0.0;
        for (std::size_t i = 0; i < removed.size(); ++i) {
            const auto [b1, b2] = best_insertions(routes, removed[i], inst);
            // greedy: cheapest insertion first; regret-2: largest b2-b1 first
            const double key = op == 0 ? -b1.cost : b2.cost - b1.cost;
            if (i == 0 || key > best_key) {
                pick = i;
                best_key = key;
                where = b1;
            }
        }
        apply_insertion(routes, removed[pick], where);
        removed.erase(removed.begin() + static_cast<std::ptrdiff_t>(pick));
    }
}

}  // namespace

SearchResult alns_solve(const ProblemInstance& inst, long long budget_iters, std::uint64_t seed,
                        const AlnsConfig& cfg, PSGPool* record, const Solution* init) {
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t_start] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
            .count();
    };
    Rng rng(seed);
    Solution cur = init ? *init : greedy_nearest_neighbor(inst);

    int tip = -1;
    if (record) {
        const int sample = record->start_sample(cur);
        tip = record->window(sample).back();
        // recorded trajectories must terminate at move local optima, so the
        // root is descended before any destroy/repair step
        while (auto mv = best_improving_move(cur, inst)) {
            cur = apply_move(cur, *mv, inst);
            tip = record->add_node(tip, static_cast<int>(mv->kind), cur);
        }
    }

    SearchResult res;
    res.best = cur;
    res.best_feasible = cur.report.is_feasible;
    auto offer_best = [&res](const Solution& s) {
        const bool better = s.report.is_feasible
                                ? (!res.best_feasible || s.objective < res.best.objective - 1e-12)
                                : (!res.best_feasible &&
                                   search_cost(s) < search_cost(res.best) - 1e-12);
        if (better) {
            res.best = s;
            res.best_feasible = s.report.is_feasible;
        }
        return better && s.report.is_feasible;
    };
    res.trace.push_back({0, res.best.objective, cur.objective, "init", 0, elapsed_ms()});

    const double t0 = std::max(cfg.warm_gap * search_cost(cur), 1e-9) / std::log(2.0);
    const double cool =
        budget_iters > 0 ? std::pow(cfg.cool_to, 1.0 / static_cast<double>(budget_iters)) : 1.0;
    double temp = t0;

    // adaptive weights over the six destroy x repair pairs
    std::vector<double> weight(6, 1.0), score(6, 0.0);
    std::vector<int> uses(6, 0);

    const auto cps = checkpoint_iters(budget_iters);
    std::size_t next_cp = 0;
    const int qmax = std::max(2, static_cast<int>(std::lround(cfg.remove_frac * inst.n())));

    for (long long it = 1; it <= budget_iters; ++it) {
        const std::size_t op = rng.weighted_index(weight);
        const int d_op = static_cast<int>(op) / 2, r_op = static_cast<int>(op) % 2;
        const int q = static_cast<int>(rng.uniform_int(1, qmax));

        std::vector<std::vector<int>> routes = cur.routes;
        const std::vector<int> removed = destroy(d_op, routes, q, inst, rng);
        repair(r_op, routes, removed, inst);
        const Solution repaired = make_solution(std::move(routes), inst);

        Solution cand = repaired;
        std::vector<std::pair<int, Solution>> polish_steps;
        if (cfg.polish) {
            while (auto mv = best_improving_move(cand, inst)) {
                cand = apply_move(cand, *mv, inst);
                polish_steps.emplace_back(static_cast<int>(mv->kind), cand);
            }
        }

        const double dc = search_cost(cand) - search_cost(cur);
        const bool new_best = offer_best(cand);
        const bool accept =
            dc < 0.0 || rng.uniform() < std::exp(-dc / std::max(temp, 1e-12));
        score[op] += new_best ? cfg.rewards[0] : (dc < 0.0 ? cfg.rewards[1]
                                                 : accept  ? cfg.rewards[2]
                                                           : 0.0);
        ++uses[op];

        if (accept) {
            cur = cand;
            if (record) {
                tip = record->add_node(tip, kJumpEdgeIndex, repaired);
                for (auto& [kind, sol] : polish_steps)
                    tip = record->add_node(tip, kind, std::move(sol));
            }
        }

        temp *= cool;
        if (cfg.segment > 0 && it % cfg.segment == 0) {
            for (std::size_t i = 0; i < weight.size(); ++i) {
                if (uses[i] > 0)
                    weight[i] = std::max(1e-3, (1.0 - cfg.reaction) * weight[i] +
                                                   cfg.reaction * score[i] / uses[i]);
                score[i] = 0.0;
                uses[i] = 0;
            }
        }

        res.trace.push_back({it, res.best.objective, cur.objective,
                             std::string(kDestroyNames[d_op]) + "+" + kRepairNames[r_op], 0,
                             elapsed_ms()});
        while (next_cp < cps.size() && it == cps[next_cp]) {
            res.checkpoint_best.push_back(res.best.objective);
            ++next_cp;
        }
    }
    res.iterations = budget_iters;
    res.elapsed_ms = elapsed_ms();
    return res;
}

}  // namespace coagents
