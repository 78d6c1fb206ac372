#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coagents/model.hpp"
#include "coagents/rng.hpp"
#include "coagents/vrp.hpp"

namespace coagents {

// One labeled window for the joint node/move selection loss. Exactly one
// (node, kind) pair is positive; the node label is that pair's node.
struct SelectSample {
    int instance_index = 0;
    double tier_percent = 0.0;  // perturbation gap this window came from
    nn::WindowData window;
    int label_node = -1;  // window index
    int label_kind = -1;  // MoveKind index
};

struct SelectionDataset {
    std::vector<ProblemInstance> instances;
    std::vector<SelectSample> samples;
};

// One anchored window for the jump loss. Targets are flattened
// (n+1)x(n+1) successor matrices; the first is always the reference optimum.
struct JumpSample {
    int instance_index = 0;
    nn::WindowData window;
    int anchor = -1;  // window index the decoder reads
    std::vector<std::vector<double>> targets;
};

struct JumpDataset {
    std::vector<ProblemInstance> instances;
    std::vector<JumpSample> samples;
};

struct SelectGenConfig {
    std::vector<double> tiers{0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0};  // percent of optimum
    int chains_per_tier = 8;
    int perturb_move_cap = 400;  // random-move budget to reach a tier
    int max_window = 12;         // nodes per emitted training window
    double penalty_scale = 10.0;  // protected-arc penalty = scale * depot round trips
};

struct SelectGenStats {
    int tiers_skipped = 0;   // tier unreachable within the move budget
    int ties_discarded = 0;  // windows without a unique best label
    int windows_empty = 0;   // windows where no pair had a candidate
    int emitted = 0;
};

// Perturb-and-improve: walk away from `reference` under a penalty on its arcs
// until each gap tier is reached, then record a chain of random improving
// moves as one search graph and label one window from it. The label is the
// (node, kind) of the single move, over every candidate in the window, whose
// result lands closest to `reference` by arc overlap (objective tie-break;
// a remaining tie between distinct labels discards the window).
std::vector<SelectSample> generate_selection_samples(const ProblemInstance& inst,
                                                     const Solution& reference,
                                                     const SelectGenConfig& cfg, Rng& rng,
                                                     SelectGenStats* stats = nullptr);

struct JumpGenConfig {
    int starts = 4;      // independent destroy/repair trajectories
    long long trajectory_iters = 40;
    int max_targets = 4;  // reference + up to (max_targets - 1) one-move predecessors
    int max_window = 12;
    int windows_per_start = 2;
};

// Destroy/repair trajectories recorded as search graphs; each emitted window
// is anchored at its lowest-cost node and labeled with the successor matrices
// of the reference optimum and its nearest one-move predecessors.
std::vector<JumpSample> generate_jump_samples(const ProblemInstance& inst,
                                              const Solution& reference, const JumpGenConfig& cfg,
                                              Rng& rng);

// Row-stochastic successor encoding of a solution over n+1 rows: every
// customer points at its route successor (the depot after the last stop) and
// the depot points at the first customer of the route whose head has the
// lowest id. Rows of uncovered customers point at the depot.
std::vector<double> successor_matrix(const Solution& s, int n);

// Feasible one-move neighbors of `reference` from which a single improving
// move reaches it again, sorted by objective, deduplicated.
std::vector<Solution> one_move_predecessors(const Solution& reference,
                                            const ProblemInstance& inst, int limit);

void save_selection_dataset(const SelectionDataset& d, const std::string& path);
SelectionDataset load_selection_dataset(const std::string& path);
void save_jump_dataset(const JumpDataset& d, const std::string& path);
JumpDataset load_jump_dataset(const std::string& path);

}  // namespace coagents
