#include "coagents/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "coagents/moves.hpp"
#include "coagents/psg.hpp"
#include "coagents/search.hpp"
#include "json.hpp"

namespace coagents {

using nlohmann::json;

namespace {

constexpr double kObjTieEps = 1e-9;

}  // namespace

std::vector<SelectSample> generate_selection_samples(const ProblemInstance& inst,
                                                     const Solution& reference,
                                                     const SelectGenConfig& cfg, Rng& rng,
                                                     SelectGenStats* stats) {
    SelectGenStats local;
    SelectGenStats& st = stats ? *stats : local;
    const auto protected_arcs = decision_arcs(reference);
    const double lambda = cfg.penalty_scale * inst.depot_round_trips();
    std::vector<SelectSample> out;

    for (double tier : cfg.tiers) {
        for (int chain = 0; chain < cfg.chains_per_tier; ++chain) {
            // walk away from the reference: random feasible moves are kept
            // when they lower the objective + lambda * protected-arc overlap
            Solution cur = reference;
            double cur_pen = penalized_objective(cur, protected_arcs, lambda);
            bool reached = false;
            for (int step = 0; step < cfg.perturb_move_cap && !reached; ++step) {
                const auto kind = static_cast<MoveKind>(rng.index(kNumMoveKinds));
                const auto cands = enumerate_moves(cur, inst, kind);
                if (cands.empty()) continue;
                const MoveApplication& m = cands[rng.index(cands.size())];
                if (!m.resulting_feasible) continue;
                Solution next = apply_move(cur, m, inst);
                const double next_pen = penalized_objective(next, protected_arcs, lambda);
                if (next_pen < cur_pen - 1e-12) {
                    cur = std::move(next);
                    cur_pen = next_pen;
                    const double gap =
                        100.0 * (cur.objective - reference.objective) / reference.objective;
                    reached = gap >= tier;
                }
            }
            if (!reached) {
                ++st.tiers_skipped;
                continue;
            }

            // improvement chain from the perturbed root, recorded as one graph
            PSGPool pool(64);
            const int sample = pool.start_sample(cur);
            int tip = pool.window(sample).back();
            Solution walk = cur;
            while (auto mv = random_improving_move(walk, inst, rng)) {
                walk = apply_move(walk, *mv, inst);
                tip = pool.add_node(tip, static_cast<int>(mv->kind), walk);
            }

            const SubgraphView view = random_window(pool, sample, rng, cfg.max_window);
            nn::WindowData w = nn::snapshot_window(pool, view, inst);

            // label: the single move, over every node and every candidate,
            // whose result lands closest to the reference by arc overlap,
            // breaking ties on resulting objective; a residual tie between
            // distinct (node, kind) labels discards the window
            int best_node = -1, best_kind = -1, best_overlap = -1;
            double best_obj = 0.0;
            bool tie = false;
            for (std::size_t i = 0; i < w.solutions.size(); ++i) {
                for (int m = 0; m < kNumMoveKinds; ++m) {
                    for (const MoveApplication& cand :
                         enumerate_moves(w.solutions[i], inst, static_cast<MoveKind>(m))) {
                        const Solution res = apply_move(w.solutions[i], cand, inst);
                        const int ov = arc_overlap(decision_arcs(res), protected_arcs);
                        if (ov > best_overlap ||
                            (ov == best_overlap && res.objective < best_obj - kObjTieEps)) {
                            best_node = static_cast<int>(i);
                            best_kind = m;
                            best_overlap = ov;
                            best_obj = res.objective;
                            tie = false;
                        } else if (ov == best_overlap &&
                                   std::abs(res.objective - best_obj) <= kObjTieEps &&
                                   (static_cast<int>(i) != best_node || m != best_kind)) {
                            tie = true;
                        }
                    }
                }
            }
            if (best_node < 0) {
                ++st.windows_empty;
                continue;
            }
            if (tie) {
                ++st.ties_discarded;
                continue;
            }
            SelectSample s;
            s.instance_index = 0;
            s.tier_percent = tier;
            s.window = std::move(w);
            s.label_node = best_node;
            s.label_kind = best_kind;
            out.push_back(std::move(s));
            ++st.emitted;
        }
    }
    return out;
}

std::vector<double> successor_matrix(const Solution& s, int n) {
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    std::vector<double> y(N * N, 0.0);
    std::vector<char> covered(N, 0);
    int depot_next = -1;
    for (const auto& route : s.routes) {
        if (route.empty()) continue;
        if (depot_next < 0 || route.front() < depot_next) depot_next = route.front();
        int prev = route.front();
        covered[prev] = 1;
        for (std::size_t j = 1; j < route.size(); ++j) {
            y[static_cast<std::size_t>(prev) * N + route[j]] = 1.0;
            prev = route[j];
            covered[prev] = 1;
        }
        y[static_cast<std::size_t>(prev) * N] = 1.0;  // back to the depot
    }
    if (depot_next < 0) depot_next = n >= 1 ? 1 : 0;  // no routes: degenerate anchor
    y[depot_next] = 1.0;
    for (int i = 1; i <= n; ++i)
        if (!covered[i]) y[static_cast<std::size_t>(i) * N] = 1.0;
    return y;
}

std::vector<Solution> one_move_predecessors(const Solution& reference,
                                            const ProblemInstance& inst, int limit) {
    std::vector<Solution> out;
    if (limit <= 0) return out;
    std::set<std::uint64_t> seen{reference.fingerprint};
    for (int k = 0; k < kNumMoveKinds; ++k) {
        for (const MoveApplication& m :
             enumerate_moves(reference, inst, static_cast<MoveKind>(k))) {
            if (!m.resulting_feasible) continue;
            Solution nb = apply_move(reference, m, inst);
            if (nb.objective <= reference.objective + kObjTieEps) continue;  // need a strict drop back
            if (!seen.insert(nb.fingerprint).second) continue;
            // keep only neighbors one improving move can convert back
            bool returns = false;
            for (int k2 = 0; k2 < kNumMoveKinds && !returns; ++k2) {
                for (const MoveApplication& back :
                     enumerate_moves(nb, inst, static_cast<MoveKind>(k2))) {
                    if (back.delta >= 0.0) break;  // sorted: no improving candidates left
                    if (!back.resulting_feasible) continue;
                    if (std::abs(nb.objective + back.delta - reference.objective) > 1e-6) continue;
                    if (apply_move(nb, back, inst).fingerprint == reference.fingerprint) {
                        returns = true;
                        break;
                    }
                }
            }
            if (returns) out.push_back(std::move(nb));
        }
    }
    std::sort(out.begin(), out.end(), [](const Solution& a, const Solution& b) {
        if (a.objective != b.objective) return a.objective < b.objective;
        return a.fingerprint < b.fingerprint;
    });
    if (static_cast<int>(out.size()) > limit) out.resize(limit);
    return out;
}

std::vector<JumpSample> generate_jump_samples(const ProblemInstance& inst,
                                              const Solution& reference, const JumpGenConfig& cfg,
                                              Rng& rng) {
    const int n = inst.n();
    std::vector<std::vector<double>> targets{successor_matrix(reference, n)};
    for (const Solution& p : one_move_predecessors(reference, inst, cfg.max_targets - 1))
        targets.push_back(successor_matrix(p, n));

    std::vector<JumpSample> out;
    for (int start = 0; start < cfg.starts; ++start) {
        PSGPool pool(64);
        const Solution init = randomized_greedy(inst, rng);
        alns_solve(inst, cfg.trajectory_iters, rng.next_u64(), AlnsConfig{}, &pool, &init);
        for (int w = 0; w < cfg.windows_per_start; ++w) {
            const SubgraphView view = random_window(pool, 0, rng, cfg.max_window);
            nn::WindowData wd = nn::snapshot_window(pool, view, inst);
            int anchor = 0;
            for (std::size_t i = 1; i < wd.solutions.size(); ++i)
                if (search_cost(wd.solutions[i]) < search_cost(wd.solutions[anchor]))
                    anchor = static_cast<int>(i);
            JumpSample s;
            s.instance_index = 0;
            s.window = std::move(wd);
            s.anchor = anchor;
            s.targets = targets;
            out.push_back(std::move(s));
        }
    }
    return out;
}

// ---- serialization ----------------------------------------------------------

namespace {

constexpr const char* kSelectFormat = "coagents-select-data";
constexpr const char* kJumpFormat = "coagents-jump-data";
constexpr int kVersion = 1;

json window_json(const nn::WindowData& w) {
    json routes = json::array();
    json feats = json::array();
    for (std::size_t i = 0; i < w.solutions.size(); ++i) {
        routes.push_back(w.solutions[i].routes);
        feats.push_back(w.features[i]);
    }
    json edges = json::array();
    for (const auto& e : w.edges) edges.push_back(e);
    return json{{"routes", routes}, {"features", feats}, {"edges", edges}};
}

nn::WindowData window_from(const json& j, const ProblemInstance& inst) {
    nn::WindowData w;
    const auto& routes = j.at("routes");
    const auto& feats = j.at("features");
    if (routes.size() != feats.size())
        throw std::runtime_error("dataset: window routes/features length mismatch");
    for (std::size_t i = 0; i < routes.size(); ++i) {
        w.solutions.push_back(
            make_solution(routes[i].get<std::vector<std::vector<int>>>(), inst));
        w.features.push_back(feats[i].get<std::array<double, 8>>());
    }
    for (const auto& e : j.at("edges")) w.edges.push_back(e.get<std::array<int, 3>>());
    return w;
}

json instances_json(const std::vector<ProblemInstance>& instances) {
    json arr = json::array();
    for (const ProblemInstance& inst : instances) arr.push_back(json::parse(instance_to_json(inst)));
    return arr;
}

std::vector<ProblemInstance> instances_from(const json& arr, const std::string& path) {
    std::vector<ProblemInstance> out;
    for (const auto& j : arr) out.push_back(instance_from_json(j.dump(), path));
    return out;
}

json parse_file(const std::string& path, const char* format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("dataset: " + path + ": " + e.what());
    }
    if (j.value("format", "") != format)
        throw std::runtime_error("dataset: " + path + " is not a " + std::string(format) + " file");
    if (j.value("version", 0) != kVersion)
        throw std::runtime_error("dataset: unsupported version in " + path);
    return j;
}

void write_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset: cannot write " + path);
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("dataset: short write to " + path);
}

void check_instance_index(int idx, std::size_t count, const std::string& path) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= count)
        throw std::runtime_error("dataset: instance index out of range in " + path);
}

}  // namespace

void save_selection_dataset(const SelectionDataset& d, const std::string& path) {
    json samples = json::array();
    for (const SelectSample& s : d.samples)
        samples.push_back(json{{"instance", s.instance_index},
                               {"tier", s.tier_percent},
                               {"window", window_json(s.window)},
                               {"node", s.label_node},
                               {"kind", s.label_kind}});
    write_file(json{{"format", kSelectFormat},
                    {"version", kVersion},
                    {"instances", instances_json(d.instances)},
                    {"samples", samples}},
               path);
}

SelectionDataset load_selection_dataset(const std::string& path) {
    const json j = parse_file(path, kSelectFormat);
    SelectionDataset d;
    d.instances = instances_from(j.at("instances"), path);
    for (const auto& js : j.at("samples")) {
        SelectSample s;
        s.instance_index = js.at("instance").get<int>();
        check_instance_index(s.instance_index, d.instances.size(), path);
        s.tier_percent = js.at("tier").get<double>();
        s.window = window_from(js.at("window"), d.instances[s.instance_index]);
        s.label_node = js.at("node").get<int>();
        s.label_kind = js.at("kind").get<int>();
        if (s.label_node < 0 || s.label_node >= static_cast<int>(s.window.solutions.size()) ||
            s.label_kind < 0 || s.label_kind >= kNumMoveKinds)
            throw std::runtime_error("dataset: label out of range in " + path);
        d.samples.push_back(std::move(s));
    }
    return d;
}

void save_jump_dataset(const JumpDataset& d, const std::string& path) {
    json samples = json::array();
    for (const JumpSample& s : d.samples)
        samples.push_back(json{{"instance", s.instance_index},
                               {"window", window_json(s.window)},
                               {"anchor", s.anchor},
                               {"targets", s.targets}});
    write_file(json{{"format", kJumpFormat},
                    {"version", kVersion},
                    {"instances", instances_json(d.instances)},
                    {"samples", samples}},
               path);
}

JumpDataset load_jump_dataset(const std::string& path) {
    const json j = parse_file(path, kJumpFormat);
    JumpDataset d;
    d.instances = instances_from(j.at("instances"), path);
    for (const auto& js : j.at("samples")) {
        JumpSample s;
        s.instance_index = js.at("instance").get<int>();
        check_instance_index(s.instance_index, d.instances.size(), path);
        s.window = window_from(js.at("window"), d.instances[s.instance_index]);
        s.anchor = js.at("anchor").get<int>();
        s.targets = js.at("targets").get<std::vector<std::vector<double>>>();
        const std::size_t N = static_cast<std::size_t>(d.instances[s.instance_index].n()) + 1;
        if (s.anchor < 0 || s.anchor >= static_cast<int>(s.window.solutions.size()))
            throw std::runtime_error("dataset: anchor out of range in " + path);
        if (s.targets.empty())
            throw std::runtime_error("dataset: sample without targets in " + path);
        for (const auto& t : s.targets)
            if (t.size() != N * N)
                throw std::runtime_error("dataset: target matrix size mismatch in " + path);
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace coagents
