#include "coagents/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coagents {

namespace {

// log-weight floor so zero-probability arcs stay selectable as a last resort
constexpr double kArcFloor = 1e-12;

struct BeamItem {
    std::vector<std::vector<int>> routes;  // closed routes (retained + rebuilt)
    std::vector<int> open;                 // route under construction
    std::vector<char> assigned;
    int remaining = 0;
    double logw = 0.0;  // cumulative log arc probability
    double cost = 0.0;  // distance already committed; lower bound on completion
    int last = 0;       // current row (0 = depot)
};

double route_distance(const std::vector<int>& route, const ProblemInstance& inst) {
    double d = 0.0;
    int prev = 0;
    for (int c : route) {
        d += inst.dist(prev, c);
        prev = c;
    }
    return d + inst.dist(prev, 0);
}

struct Extension {
    std::size_t item = 0;
    int next = 0;  // customer id or 0 for the depot
    double logw = 0.0;
};

}  // namespace

std::optional<Solution> constrained_beam_search(const std::vector<double>& P, const Solution& s0,
                                                const ProblemInstance& inst, const BeamConfig& cfg,
                                                Rng& rng) {
    const int n = inst.n();
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    if (P.size() != N * N) throw std::invalid_argument("beam: P size mismatch");
    if (cfg.n_beam < 1) throw std::invalid_argument("beam: width must be positive");
    auto prob = [&](int a, int b) { return P[static_cast<std::size_t>(a) * N + b]; };

    // score the seed's routes by mean arc probability and keep all but the
    // weakest three (none survive when the seed has fewer than four routes)
    std::vector<std::size_t> order(s0.routes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> route_score(s0.routes.size(), 0.0);
    for (std::size_t i = 0; i < s0.routes.size(); ++i) {
        const auto& r = s0.routes[i];
        double sum = 0.0;
        int prev = 0;
        for (int c : r) {
            sum += prob(prev, c);
            prev = c;
        }
        sum += prob(prev, 0);
        route_score[i] = sum / static_cast<double>(r.size() + 1);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (route_score[a] != route_score[b]) return route_score[a] < route_score[b];
        return a < b;
    });
    const std::size_t dropped = s0.routes.size() < 4 ? s0.routes.size() : 3;

    BeamItem seed;
    seed.assigned.assign(N, 0);
    seed.remaining = n;
    for (std::size_t oi = dropped; oi < order.size(); ++oi) {
        const auto& r = s0.routes[order[oi]];
        seed.routes.push_back(r);
        seed.cost += route_distance(r, inst);
        for (int c : r) {
            seed.assigned[c] = 1;
            --seed.remaining;
        }
    }

    std::vector<BeamItem> S;
    std::vector<Solution> F;
    if (seed.remaining == 0)
        F.push_back(make_solution(seed.routes, inst));
    else
        S.push_back(std::move(seed));

    while (!S.empty() && static_cast<int>(F.size()) < cfg.n_beam) {
        if (!F.empty()) {
            double min_s = S[0].cost, max_f = F[0].objective;
            for (const BeamItem& b : S) min_s = std::min(min_s, b.cost);
            for (const Solution& f : F) max_f = std::max(max_f, f.objective);
            // no incomplete candidate can still beat the worst finished one
            if (min_s >= max_f) break;
        }

        std::vector<Extension> exts;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const BeamItem& b = S[i];
            for (int c = 1; c <= n; ++c)
                if (!b.assigned[c])
                    exts.push_back({i, c, b.logw + std::log(std::max(prob(b.last, c), kArcFloor))});
            if (!b.open.empty())
                exts.push_back({i, 0, b.logw + std::log(std::max(prob(b.last, 0), kArcFloor))});
        }
        if (exts.empty()) break;

        const std::size_t want =
            std::min(exts.size(), static_cast<std::size_t>(cfg.n_beam) - F.size());
        if (cfg.argmax) {
            std::stable_sort(exts.begin(), exts.end(), [](const Extension& a, const Extension& b) {
                return a.logw > b.logw;
            });
        } else {
            // weighted sampling without replacement via perturbed log-weights
            std::vector<std::pair<double, std::size_t>> keys(exts.size());
            for (std::size_t i = 0; i < exts.size(); ++i) {
                const double u = std::max(rng.uniform(), 1e-300);
                keys[i] = {exts[i].logw - std::log(-std::log(u)), i};
            }
            std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            std::vector<Extension> picked;
            picked.reserve(want);
            for (std::size_t i = 0; i < want; ++i) picked.push_back(exts[keys[i].second]);
            exts = std::move(picked);
        }
        exts.resize(std::min(exts.size(), want));

        std::vector<BeamItem> next;
        for (const Extension& e : exts) {
            BeamItem b = S[e.item];
            b.logw = e.logw;
            if (e.next == 0) {
                b.cost += inst.dist(b.last, 0);
                b.routes.push_back(std::move(b.open));
                b.open.clear();
                b.last = 0;
                if (b.remaining == 0) {
                    if (static_cast<int>(F.size()) < cfg.n_beam)
                        F.push_back(make_solution(b.routes, inst));
                    continue;
                }
            } else {
                b.cost += inst.dist(b.last, e.next);
                b.open.push_back(e.next);
                b.assigned[e.next] = 1;
                --b.remaining;
                b.last = e.next;
            }
            next.push_back(std::move(b));
        }
        S = std::move(next);
    }

    if (F.empty()) return std::nullopt;
    const Solution* best = &F[0];
    for (const Solution& f : F)
        if (f.objective < best->objective) best = &f;
    return *best;
}

Solution greedy_probability_decode(const std::vector<double>& P, const ProblemInstance& inst) {
    const int n = inst.n();
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    if (P.size() != N * N) throw std::invalid_argument("decode: P size mismatch");
    std::vector<char> assigned(N, 0);
    std::vector<std::vector<int>> routes;
    std::vector<int> open;
    int last = 0, remaining = n;
    while (remaining > 0 || !open.empty()) {
        int pick = -1;
        double best = -1.0;
        if (!open.empty() && P[static_cast<std::size_t>(last) * N] > best) {
            best = P[static_cast<std::size_t>(last) * N];
            pick = 0;
        }
        for (int c = 1; c <= n; ++c) {
            if (assigned[c]) continue;
            const double p = P[static_cast<std::size_t>(last) * N + c];
            if (p > best) {
                best = p;
                pick = c;
            }
        }
        if (pick <= 0) {  // depot argmax, exhausted row, or nothing unassigned
            routes.push_back(std::move(open));
            open.clear();
            last = 0;
        } else {
            open.push_back(pick);
            assigned[pick] = 1;
            --remaining;
            last = pick;
        }
    }
    return make_solution(std::move(routes), inst);
}

Solution jump_solution(const ProblemInstance& inst, nn::Model& model, const PSGPool& pool,
                       int sample_id, int anchor_node, const BeamConfig& cfg, Rng& rng) {
    const SubgraphView view = full_window(pool, sample_id);
    const auto it = std::find(view.node_ids.begin(), view.node_ids.end(), anchor_node);
    if (it == view.node_ids.end())
        throw std::invalid_argument("jump: anchor node is not in the sample window");
    const std::size_t idx = static_cast<std::size_t>(it - view.node_ids.begin());
    const nn::BatchGraph g = build_batch(pool, view, inst, model.config());
    const nn::Tensor P = model.forward_jump(g, idx);
    const Solution& anchor = pool.node(anchor_node).solution;
    const auto out = constrained_beam_search(P.value(), anchor, inst, cfg, rng);
    return out ? *out : greedy_probability_decode(P.value(), inst);
}

}  // namespace coagents
