#include "coagents/moves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coagents {

namespace {

constexpr double kImproveEps = 1e-12;
const std::vector<int> kEmptyRoute;

// customer id at position p, depot when p falls off either end
int at(const std::vector<int>& r, int p) {
    return (p < 0 || p >= static_cast<int>(r.size())) ? 0 : r[p];
}

double route_lateness_of(const std::vector<int>& r, const ProblemInstance& inst) {
    if (inst.variant() != Variant::VRPTW) return 0.0;
    double t = inst.depot_early(), late = 0.0;
    int prev = 0;
    for (int id : r) {
        const Customer& c = inst.customer(id);
        const double arrival = t + inst.dist(prev, id);
        if (arrival > c.tw_late) late += arrival - c.tw_late;
        t = std::max(arrival, c.tw_early) + c.service;
        prev = id;
    }
    const double back = t + inst.dist(prev, 0);
    if (back > inst.depot_late()) late += back - inst.depot_late();
    return late;
}

int load_of(const std::vector<int>& r, const ProblemInstance& inst) {
    int load = 0;
    for (int id : r) load += inst.customer(id).demand;
    return load;
}

// Feasibility/cost annotation from the affected routes only. `affected` maps
// route index (routes.size() = fresh route) to its new contents.
void annotate(MoveApplication& m, const Solution& s, const ProblemInstance& inst,
              const std::vector<std::pair<int, std::vector<int>>>& affected) {
    const int nroutes = static_cast<int>(s.routes.size());
    auto touched = [&](int r) {
        for (const auto& [idx, _] : affected)
            if (idx == r) return true;
        return false;
    };
    double excess_after = 0.0, lateness_after = 0.0;
    for (int r = 0; r < nroutes; ++r) {
        if (touched(r)) continue;
        excess_after += s.report.capacity_excess[r];
        lateness_after += s.report.route_lateness[r];
    }
    for (const auto& [idx, route] : affected) {
        (void)idx;
        excess_after += std::max(0.0, static_cast<double>(load_of(route, inst) - inst.capacity()));
        lateness_after += route_lateness_of(route, inst);
    }
    double excess_before = 0.0;
    for (double e : s.report.capacity_excess) excess_before += e;

    m.cost_delta = m.delta + kInfeasiblePenalty * ((lateness_after - s.report.total_lateness) +
                                                   (excess_after - excess_before));
    m.resulting_feasible = excess_after == 0.0 && lateness_after == 0.0 &&
                           s.report.uncovered.empty() && s.report.duplicated.empty();
}

MoveApplication base_move(const Solution& s, MoveKind kind, int a, int b, int c, int d,
                          double delta) {
    MoveApplication m;
    m.kind = kind;
    m.operands = {a, b, c, d};
    m.delta = delta;
    m.source_fingerprint = s.fingerprint;
    return m;
}

void enumerate_relocate(const Solution& s, const ProblemInstance& inst,
                        std::vector<MoveApplication>& out) {
    const int nroutes = static_cast<int>(s.routes.size());
    for (int r1 = 0; r1 < nroutes; ++r1) {
        const auto& R1 = s.routes[r1];
        const int L1 = static_cast<int>(R1.size());
        for (int i = 0; i < L1; ++i) {
            const int u = R1[i];
            const double rm = inst.dist(at(R1, i - 1), at(R1, i + 1)) -
                              inst.dist(at(R1, i - 1), u) - inst.dist(u, at(R1, i + 1));
            std::vector<int> r1_reduced = R1;
            r1_reduced.erase(r1_reduced.begin() + i);
            for (int r2 = 0; r2 <= nroutes; ++r2) {
                if (r2 == nroutes && L1 < 2) continue;  // singleton to fresh route is a no-op
                const bool same = r2 == r1;
                const bool fresh = r2 == nroutes;
                const std::vector<int>& target =
                    fresh ? kEmptyRoute : (same ? r1_reduced : s.routes[r2]);
                const int L2 = static_cast<int>(target.size());
                for (int j = 0; j <= (fresh ? 0 : L2); ++j) {
                    if (same && j == i) continue;  // identity
                    const int a = at(target, j - 1), b = at(target, j);
                    const double ins = inst.dist(a, u) + inst.dist(u, b) - inst.dist(a, b);
                    MoveApplication m =
                        base_move(s, MoveKind::RelocateOne, r1, i, r2, j, rm + ins);
                    std::vector<int> new_target = target;
                    new_target.insert(new_target.begin() + j, u);
                    if (same) {
                        annotate(m, s, inst, {{r1, new_target}});
                    } else {
                        annotate(m, s, inst, {{r1, r1_reduced}, {r2, new_target}});
                    }
                    out.push_back(m);
                }
            }
        }
    }
}

void enumerate_swap(const Solution& s, const ProblemInstance& inst,
                    std::vector<MoveApplication>& out) {
    const int nroutes = static_cast<int>(s.routes.size());
    for (int r1 = 0; r1 < nroutes; ++r1) {
        const auto& R1 = s.routes[r1];
        const int L1 = static_cast<int>(R1.size());
        for (int i = 0; i < L1; ++i) {
            for (int r2 = r1; r2 < nroutes; ++r2) {
                const auto& R2 = s.routes[r2];
                const int L2 = static_cast<int>(R2.size());
                for (int j = (r2 == r1 ? i + 1 : 0); j < L2; ++j) {
                    const int u = R1[i], v = R2[j];
                    double delta;
                    if (r1 == r2 && j == i + 1) {
                        // adjacent: shared edge keeps its length
                        delta = inst.dist(at(R1, i - 1), v) + inst.dist(u, at(R1, j + 1)) -
                                inst.dist(at(R1, i - 1), u) - inst.dist(v, at(R1, j + 1));
                    } else {
                        delta = inst.dist(at(R1, i - 1), v) + inst.dist(v, at(R1, i + 1)) -
                                inst.dist(at(R1, i - 1), u) - inst.dist(u, at(R1, i + 1)) +
                                inst.dist(at(R2, j - 1), u) + inst.dist(u, at(R2, j + 1)) -
                                inst.dist(at(R2, j - 1), v) - inst.dist(v, at(R2, j + 1));
                    }
                    MoveApplication m = base_move(s, MoveKind::SwapOneOne, r1, i, r2, j, delta);
                    if (r1 == r2) {
                        std::vector<int> nr = R1;
                        std::swap(nr[i], nr[j]);
                        annotate(m, s, inst, {{r1, nr}});
                    } else {
                        std::vector<int> n1 = R1, n2 = R2;
                        std::swap(n1[i], n2[j]);
                        annotate(m, s, inst, {{r1, n1}, {r2, n2}});
                    }
                    out.push_back(m);
                }
            }
        }
    }
}

void enumerate_two_opt_intra(const Solution& s, const ProblemInstance& inst,
                             std::vector<MoveApplication>& out) {
    for (int r = 0; r < static_cast<int>(s.routes.size()); ++r) {
        const auto& R = s.routes[r];
        const int L = static_cast<int>(R.size());
        for (int i = 0; i < L; ++i)
            for (int j = i + 1; j < L; ++j) {
                const double delta = inst.dist(at(R, i - 1), R[j]) + inst.dist(R[i], at(R, j + 1)) -
                                     inst.dist(at(R, i - 1), R[i]) - inst.dist(R[j], at(R, j + 1));
                MoveApplication m = base_move(s, MoveKind::TwoOptIntra, r, i, j, -1, delta);
                std::vector<int> nr = R;
                std::reverse(nr.begin() + i, nr.begin() + j + 1);
                annotate(m, s, inst, {{r, nr}});
                out.push_back(m);
            }
    }
}

void enumerate_two_opt_star(const Solution& s, const ProblemInstance& inst,
                            std::vector<MoveApplication>& out) {
    const int nroutes = static_cast<int>(s.routes.size());
    for (int r1 = 0; r1 < nroutes; ++r1)
        for (int r2 = r1 + 1; r2 < nroutes; ++r2) {
            const auto& R1 = s.routes[r1];
            const auto& R2 = s.routes[r2];
            const int L1 = static_cast<int>(R1.size()), L2 = static_cast<int>(R2.size());
            for (int i = 0; i <= L1; ++i)
                for (int j = 0; j <= L2; ++j) {
                    if (i == 0 && j == 0) continue;      // whole-route swap, same solution
                    if (i == L1 && j == L2) continue;    // empty tails, identity
                    const int p1 = at(R1, i - 1), t1 = at(R1, i);
                    const int p2 = at(R2, j - 1), t2 = at(R2, j);
                    const double delta = inst.dist(p1, t2) + inst.dist(p2, t1) -
                                         inst.dist(p1, t1) - inst.dist(p2, t2);
                    MoveApplication m = base_move(s, MoveKind::TwoOptStar, r1, i, r2, j, delta);
                    std::vector<int> n1(R1.begin(), R1.begin() + i);
                    n1.insert(n1.end(), R2.begin() + j, R2.end());
                    std::vector<int> n2(R2.begin(), R2.begin() + j);
                    n2.insert(n2.end(), R1.begin() + i, R1.end());
                    annotate(m, s, inst, {{r1, n1}, {r2, n2}});
                    out.push_back(m);
                }
        }
}

void enumerate_or_opt(const Solution& s, const ProblemInstance& inst,
                      std::vector<MoveApplication>& out) {
    const int nroutes = static_cast<int>(s.routes.size());
    for (int r1 = 0; r1 < nroutes; ++r1) {
        const auto& R1 = s.routes[r1];
        const int L1 = static_cast<int>(R1.size());
        for (int i = 0; i + 1 < L1; ++i) {
            const int u1 = R1[i], u2 = R1[i + 1];
            const double rm = inst.dist(at(R1, i - 1), at(R1, i + 2)) -
                              inst.dist(at(R1, i - 1), u1) - inst.dist(u2, at(R1, i + 2));
            std::vector<int> r1_reduced = R1;
            r1_reduced.erase(r1_reduced.begin() + i, r1_reduced.begin() + i + 2);
            for (int r2 = 0; r2 <= nroutes; ++r2) {
                if (r2 == nroutes && L1 < 3) continue;  // whole route to a fresh route is a no-op
                const bool same = r2 == r1;
                const bool fresh = r2 == nroutes;
                const std::vector<int>& target =
                    fresh ? kEmptyRoute : (same ? r1_reduced : s.routes[r2]);
                const int L2 = static_cast<int>(target.size());
                for (int j = 0; j <= (fresh ? 0 : L2); ++j) {
                    if (same && j == i) continue;  // identity
                    const int a = at(target, j - 1), b = at(target, j);
                    const double ins = inst.dist(a, u1) + inst.dist(u2, b) - inst.dist(a, b);
                    MoveApplication m = base_move(s, MoveKind::OrOptSeg2, r1, i, r2, j, rm + ins);
                    std::vector<int> new_target = target;
                    new_target.insert(new_target.begin() + j, {u1, u2});
                    if (same) {
                        annotate(m, s, inst, {{r1, new_target}});
                    } else {
                        annotate(m, s, inst, {{r1, r1_reduced}, {r2, new_target}});
                    }
                    out.push_back(m);
                }
            }
        }
    }
}

void enumerate_cross(const Solution& s, const ProblemInstance& inst,
                     std::vector<MoveApplication>& out) {
    const int nroutes = static_cast<int>(s.routes.size());
    for (int r1 = 0; r1 < nroutes; ++r1)
        for (int r2 = r1 + 1; r2 < nroutes; ++r2) {
            const auto& R1 = s.routes[r1];
            const auto& R2 = s.routes[r2];
            for (int i = 0; i + 1 < static_cast<int>(R1.size()); ++i)
                for (int j = 0; j + 1 < static_cast<int>(R2.size()); ++j) {
                    const int u1 = R1[i], u2 = R1[i + 1];
                    const int v1 = R2[j], v2 = R2[j + 1];
                    const double delta =
                        inst.dist(at(R1, i - 1), v1) + inst.dist(v2, at(R1, i + 2)) -
                        inst.dist(at(R1, i - 1), u1) - inst.dist(u2, at(R1, i + 2)) +
                        inst.dist(at(R2, j - 1), u1) + inst.dist(u2, at(R2, j + 2)) -
                        inst.dist(at(R2, j - 1), v1) - inst.dist(v2, at(R2, j + 2));
                    MoveApplication m = base_move(s, MoveKind::CrossExchange, r1, i, r2, j, delta);
                    std::vector<int> n1 = R1, n2 = R2;
                    n1[i] = v1;
                    n1[i + 1] = v2;
                    n2[j] = u1;
                    n2[j + 1] = u2;
                    annotate(m, s, inst, {{r1, n1}, {r2, n2}});
                    out.push_back(m);
                }
        }
}

}  // namespace

std::string move_kind_name(MoveKind k) {
    switch (k) {
        case MoveKind::RelocateOne: return "RelocateOne";
        case MoveKind::SwapOneOne: return "SwapOneOne";
        case MoveKind::TwoOptIntra: return "TwoOptIntra";
        case MoveKind::TwoOptStar: return "TwoOptStar";
        case MoveKind::OrOptSeg2: return "OrOptSeg2";
        case MoveKind::CrossExchange: return "CrossExchange";
    }
    throw std::invalid_argument("move_kind_name: bad kind");
}

MoveKind move_kind_from_name(const std::string& s) {
    for (int k = 0; k < kNumMoveKinds; ++k)
        if (move_kind_name(static_cast<MoveKind>(k)) == s) return static_cast<MoveKind>(k);
    throw std::invalid_argument("move_kind_from_name: unknown kind '" + s + "'");
}

std::vector<MoveApplication> enumerate_moves(const Solution& s, const ProblemInstance& inst,
                                             MoveKind kind) {
    std::vector<MoveApplication> out;
    switch (kind) {
        case MoveKind::RelocateOne: enumerate_relocate(s, inst, out); break;
        case MoveKind::SwapOneOne: enumerate_swap(s, inst, out); break;
        case MoveKind::TwoOptIntra: enumerate_two_opt_intra(s, inst, out); break;
        case MoveKind::TwoOptStar: enumerate_two_opt_star(s, inst, out); break;
        case MoveKind::OrOptSeg2: enumerate_or_opt(s, inst, out); break;
        case MoveKind::CrossExchange: enumerate_cross(s, inst, out); break;
    }
    std::sort(out.begin(), out.end(), [](const MoveApplication& a, const MoveApplication& b) {
        if (a.delta != b.delta) return a.delta < b.delta;
        return a.operands < b.operands;
    });
    return out;
}

Solution apply_move(const Solution& s, const MoveApplication& m, const ProblemInstance& inst) {
    if (m.source_fingerprint != s.fingerprint)
        throw std::invalid_argument("apply_move: stale candidate (solution changed since enumeration)");
    std::vector<std::vector<int>> routes = s.routes;
    const auto [a, b, c, d] = m.operands;
    switch (m.kind) {
        case MoveKind::RelocateOne: {
            const int u = routes[a][b];
            routes[a].erase(routes[a].begin() + b);
            if (c == static_cast<int>(s.routes.size())) routes.push_back({u});
            else routes[c].insert(routes[c].begin() + d, u);
            break;
        }
        case MoveKind::SwapOneOne:
            std::swap(routes[a][b], routes[c][d]);
            break;
        case MoveKind::TwoOptIntra:
            std::reverse(routes[a].begin() + b, routes[a].begin() + c + 1);
            break;
        case MoveKind::TwoOptStar: {
            std::vector<int> n1(routes[a].begin(), routes[a].begin() + b);
            n1.insert(n1.end(), routes[c].begin() + d, routes[c].end());
            std::vector<int> n2(routes[c].begin(), routes[c].begin() + d);
            n2.insert(n2.end(), routes[a].begin() + b, routes[a].end());
            routes[a] = std::move(n1);
            routes[c] = std::move(n2);
            break;
        }
        case MoveKind::OrOptSeg2: {
            const int u1 = routes[a][b], u2 = routes[a][b + 1];
            routes[a].erase(routes[a].begin() + b, routes[a].begin() + b + 2);
            if (c == static_cast<int>(s.routes.size())) routes.push_back({u1, u2});
            else routes[c].insert(routes[c].begin() + d, {u1, u2});
            break;
        }
        case MoveKind::CrossExchange:
            std::swap(routes[a][b], routes[c][d]);
            std::swap(routes[a][b + 1], routes[c][d + 1]);
            break;
    }
    return make_solution(std::move(routes), inst);
}

std::optional<MoveApplication> random_improving_move(const Solution& s,
                                                     const ProblemInstance& inst, Rng& rng,
                                                     int max_draws) {
    for (int draw = 0; draw < max_draws; ++draw) {
        const MoveKind kind = static_cast<MoveKind>(rng.index(kNumMoveKinds));
        const auto cands = enumerate_moves(s, inst, kind);
        if (cands.empty()) continue;
        const MoveApplication& m = cands[rng.index(cands.size())];
        if (m.delta < -kImproveEps && m.resulting_feasible) return m;
    }
    return std::nullopt;
}

std::optional<MoveApplication> best_improving_move(const Solution& s,
                                                   const ProblemInstance& inst) {
    std::optional<MoveApplication> best;
    for (int k = 0; k < kNumMoveKinds; ++k) {
        for (const MoveApplication& m : enumerate_moves(s, inst, static_cast<MoveKind>(k))) {
            if (!(m.delta < -kImproveEps)) break;  // sorted: rest of the list is worse
            if (!m.resulting_feasible) continue;
            if (!best || m.delta < best->delta) best = m;
            break;  // first feasible improving candidate is this kind's best
        }
    }
    return best;
}

}  // namespace coagents
