#include "coagents/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "coagents/beam.hpp"

namespace coagents {

namespace {

// Nearest-neighbor chain construction; `rng` widens each choice to the three
// nearest feasible continuations. A customer that fits nowhere (possible only
// for inputs violating the generator's service guarantee) is placed alone so
// coverage always holds.
Solution greedy_construct(const ProblemInstance& inst, Rng* rng) {
    const int n = inst.n();
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::vector<int>> routes;
    int placed = 0;
    while (placed < n) {
        std::vector<int> route;
        int last = 0, load = 0;
        double t = inst.depot_early();
        while (true) {
            std::vector<std::pair<double, int>> feas;  // (leg distance, id)
            for (int c = 1; c <= n; ++c) {
                if (used[c]) continue;
                const Customer& cust = inst.customer(c);
                if (load + cust.demand > inst.capacity()) continue;
                if (inst.variant() == Variant::VRPTW) {
                    const double arrival = t + inst.dist(last, c);
                    if (arrival > cust.tw_late) continue;
                    const double leave = std::max(arrival, cust.tw_early) + cust.service;
                    if (leave + inst.dist(c, 0) > inst.depot_late()) continue;
                }
                feas.emplace_back(inst.dist(last, c), c);
            }
            if (feas.empty()) break;
            std::sort(feas.begin(), feas.end());
            const std::size_t pick = rng ? rng->index(std::min<std::size_t>(3, feas.size())) : 0;
            const int c = feas[pick].second;
            const Customer& cust = inst.customer(c);
            if (inst.variant() == Variant::VRPTW)
                t = std::max(t + inst.dist(last, c), cust.tw_early) + cust.service;
            route.push_back(c);
            used[c] = 1;
            load += cust.demand;
            last = c;
            ++placed;
        }
        if (route.empty()) {
            for (int c = 1; c <= n; ++c) {
                if (!used[c]) {
                    route.push_back(c);
                    used[c] = 1;
                    ++placed;
                    break;
                }
            }
        }
        routes.push_back(std::move(route));
    }
    return make_solution(std::move(routes), inst);
}

}  // namespace

Solution greedy_nearest_neighbor(const ProblemInstance& inst) {
    return greedy_construct(inst, nullptr);
}

Solution randomized_greedy(const ProblemInstance& inst, Rng& rng) {
    return greedy_construct(inst, &rng);
}

std::vector<long long> checkpoint_iters(long long budget) {
    std::vector<long long> cps;
    cps.reserve(10);
    for (int k = 1; k <= 10; ++k)
        cps.push_back(static_cast<long long>(
            std::ceil(static_cast<double>(budget) * k / 10.0)));
    return cps;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("trace: cannot write " + path);
    out << "iteration,best_obj,current_obj,action,sample_id,elapsed_ms\n";
    char buf[160];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%s,%d,%.3f\n", r.iteration, r.best_obj,
                      r.current_obj, r.action.c_str(), r.sample_id, r.elapsed_ms);
        out << buf;
    }
    if (!out) throw std::runtime_error("trace: short write to " + path);
}

std::string variant_label(SearchVariant v) {
    switch (v) {
        case SearchVariant::full: return "full";
        case SearchVariant::no_nsa: return "no_nsa";
        case SearchVariant::no_msa: return "no_msa";
        case SearchVariant::no_jump: return "no_jump";
    }
    throw std::invalid_argument("variant_label: bad value");
}

SearchVariant variant_from_label(const std::string& s) {
    if (s == "full") return SearchVariant::full;
    if (s == "no_nsa") return SearchVariant::no_nsa;
    if (s == "no_msa") return SearchVariant::no_msa;
    if (s == "no_jump") return SearchVariant::no_jump;
    throw std::invalid_argument("unknown search variant '" + s + "'");
}

SearchResult coagents_solve(const ProblemInstance& inst, nn::Model& select_model,
                            nn::Model& jump_model, const SearchConfig& cfg,
                            const Solution* init) {
    if (cfg.budget_iters < 0) throw std::invalid_argument("search: negative budget");
    if (cfg.stagnation_after < 1) throw std::invalid_argument("search: stagnation_after < 1");
    if (cfg.n_beam < 1 || cfg.window_cap < 1)
        throw std::invalid_argument("search: n_beam and window_cap must be positive");
    select_model.config().validate();
    jump_model.config().validate();

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t_start] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
            .count();
    };
    Rng rng(cfg.seed);

    Solution cur = init ? *init : greedy_nearest_neighbor(inst);
    PSGPool pool(64);
    int sample = pool.start_sample(cur);
    int cur_node = pool.window(sample).back();
    double local_best_cost = search_cost(cur);
    int local_best_node = cur_node;
    int stagnation = 0;

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
        return better;
    };
    res.trace.push_back({0, res.best.objective, cur.objective, "init", sample, elapsed_ms()});

    // roulette state for the no_msa variant (destroy/repair-style adaptation
    // over the six move kinds)
    std::vector<double> kind_weight(kNumMoveKinds, 1.0), kind_score(kNumMoveKinds, 0.0);
    std::vector<int> kind_uses(kNumMoveKinds, 0);

    const auto cps = checkpoint_iters(cfg.budget_iters);
    std::size_t next_cp = 0;
    const BeamConfig beam{cfg.n_beam, false};

    for (long long it = 1; it <= cfg.budget_iters; ++it) {
        std::string action;
        if (stagnation >= cfg.stagnation_after) {
            // leave this basin: decode a fresh solution and open a new sample
            if (cfg.variant == SearchVariant::no_jump) {
                cur = randomized_greedy(inst, rng);
                sample = pool.start_sample(cur);
                action = "restart";
            } else {
                cur = jump_solution(inst, jump_model, pool, sample, local_best_node, beam, rng);
                sample = pool.start_sample(cur, local_best_node);
                action = "jump";
                ++res.jumps;
            }
            cur_node = pool.window(sample).back();
            local_best_cost = search_cost(cur);
            local_best_node = cur_node;
            stagnation = 0;
            offer_best(cur);
        } else {
            const SubgraphView view =
                cfg.variant == SearchVariant::no_nsa
                    ? full_window(pool, sample)
                    : random_window(pool, sample, rng, cfg.window_cap);
            const nn::BatchGraph g = build_batch(pool, view, inst, select_model.config());
            const nn::Model::SelectOut sel = select_model.forward_select(g);
            const std::vector<double>& node_p = sel.node_prob.value();
            const std::vector<double>& pair_p = sel.pair_prob.value();

            std::size_t node_idx = 0;
            if (cfg.variant == SearchVariant::no_nsa) {
                // hill climbing: always expand the incumbent
                const auto it_node =
                    std::find(view.node_ids.begin(), view.node_ids.end(), cur_node);
                node_idx = static_cast<std::size_t>(it_node - view.node_ids.begin());
            } else {
                node_idx = rng.weighted_index(node_p);  // sigmoids renormalized
            }
            const int expand_id = view.node_ids[node_idx];
            const Solution& base = pool.node(expand_id).solution;

            std::array<std::vector<MoveApplication>, kNumMoveKinds> cands;
            std::vector<double> kind_p(kNumMoveKinds, 0.0);
            bool any = false;
            for (int m = 0; m < kNumMoveKinds; ++m) {
                cands[m] = enumerate_moves(base, inst, static_cast<MoveKind>(m));
                if (cands[m].empty()) continue;
                any = true;
                kind_p[m] = cfg.variant == SearchVariant::no_msa
                                ? kind_weight[m]
                                : pair_p[node_idx * kNumMoveKinds + m];
            }
            if (!any) {
                // nothing applicable at this node (single-customer instances)
                ++stagnation;
                res.trace.push_back(
                    {it, res.best.objective, cur.objective, "stall", sample, elapsed_ms()});
                while (next_cp < cps.size() && it == cps[next_cp]) {
                    res.checkpoint_best.push_back(res.best.objective);
                    ++next_cp;
                }
                continue;
            }
            const int kind = static_cast<int>(rng.weighted_index(kind_p));
            const MoveApplication* mv = &cands[kind][0];
            for (const MoveApplication& m : cands[kind])
                if (m.cost_delta < mv->cost_delta) mv = &m;

            Solution child = apply_move(base, *mv, inst);
            const double child_cost = search_cost(child);
            cur_node = pool.add_node(expand_id, kind, child);
            cur = std::move(child);
            ++res.moves_applied;
            action = "move:" + move_kind_name(static_cast<MoveKind>(kind));

            const bool new_best = offer_best(cur);
            if (cfg.variant == SearchVariant::no_msa) {
                kind_score[kind] += new_best ? 33.0 : (mv->cost_delta < 0.0 ? 9.0 : 13.0);
                ++kind_uses[kind];
                if (it % 100 == 0) {
                    for (int m = 0; m < kNumMoveKinds; ++m) {
                        if (kind_uses[m] > 0)
                            kind_weight[m] = std::max(
                                1e-3, 0.9 * kind_weight[m] + 0.1 * kind_score[m] / kind_uses[m]);
                        kind_score[m] = 0.0;
                        kind_uses[m] = 0;
                    }
                }
            }

            if (child_cost < local_best_cost - 1e-12) {
                local_best_cost = child_cost;
                local_best_node = cur_node;
                stagnation = 0;
            } else {
                ++stagnation;
            }
        }

        res.trace.push_back({it, res.best.objective, cur.objective, action, sample, elapsed_ms()});
        while (next_cp < cps.size() && it == cps[next_cp]) {
            res.checkpoint_best.push_back(res.best.objective);
            ++next_cp;
        }
    }
    res.iterations = cfg.budget_iters;
    res.elapsed_ms = elapsed_ms();
    return res;
}

}  // namespace coagents
