#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coagents/model.hpp"
#include "coagents/moves.hpp"
#include "coagents/psg.hpp"
#include "coagents/rng.hpp"
#include "coagents/vrp.hpp"

namespace coagents {

struct TraceRow {
    long long iteration = 0;
    double best_obj = 0.0;     // best feasible objective so far
    double current_obj = 0.0;  // objective of the incumbent solution
    std::string action;        // "init", "move:<kind>", "jump", "restart"
    int sample_id = 0;
    double elapsed_ms = 0.0;
};

struct SearchResult {
    Solution best;
    bool best_feasible = false;
    std::vector<TraceRow> trace;
    // best feasible objective recorded at 10 evenly spaced budget fractions
    std::vector<double> checkpoint_best;
    long long iterations = 0;
    long long moves_applied = 0;
    long long jumps = 0;
    double elapsed_ms = 0.0;
};

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

// 1-based iteration numbers of the 10 evenly spaced checkpoints in a budget
std::vector<long long> checkpoint_iters(long long budget);

// Deterministic nearest-neighbor construction; opens a fresh route whenever
// appending the closest remaining customer would break capacity or its window.
Solution greedy_nearest_neighbor(const ProblemInstance& inst);

// Construction used for restarts: next customer drawn from the 3 nearest
// feasible continuations instead of the single nearest.
Solution randomized_greedy(const ProblemInstance& inst, Rng& rng);

// ---- ALNS baseline ----------------------------------------------------------

struct AlnsConfig {
    // operator scores for: new global best / better than current / accepted
    std::array<double, 3> rewards{33.0, 9.0, 13.0};
    double reaction = 0.1;  // weight update smoothing at segment boundaries
    int segment = 100;      // iterations per adaptive-weight segment
    double warm_gap = 0.05;     // start temperature accepts this gap at p = 1/2
    double cool_to = 1e-4;      // final temperature as a fraction of the start
    double remove_frac = 0.3;   // q ~ U[1, max(2, round(remove_frac * n))]
    bool polish = true;         // descend to a six-kind local optimum after repair
};

// Classical destroy/repair search: {random, worst, Shaw} removal x
// {greedy, regret-2} insertion with adaptive pair weights and
// simulated-annealing acceptance. When `record` is given, every accepted
// destroy-repair transition is appended to it as a jump-kind edge and every
// polish move as a move-kind edge, so the pool traces one chain per run.
SearchResult alns_solve(const ProblemInstance& inst, long long budget_iters, std::uint64_t seed,
                        const AlnsConfig& cfg = {}, PSGPool* record = nullptr,
                        const Solution* init = nullptr);

// ---- learned search -----------------------------------------------------------

enum class SearchVariant { full, no_nsa, no_msa, no_jump };

std::string variant_label(SearchVariant v);
SearchVariant variant_from_label(const std::string& s);

struct SearchConfig {
    long long budget_iters = 1000;
    int stagnation_after = 20;  // consecutive non-improving iterations before a jump
    int n_beam = 16;
    int window_cap = 24;  // nodes fed to the selection model per iteration (<= pool cap)
    SearchVariant variant = SearchVariant::full;
    std::uint64_t seed = 1;
};

// One node-selection / move-selection / apply / record iteration per step;
// stagnation hands the sample-local best to the jump decoder and opens a new
// sample. `init` overrides the nearest-neighbor construction.
SearchResult coagents_solve(const ProblemInstance& inst, nn::Model& select_model,
                            nn::Model& jump_model, const SearchConfig& cfg,
                            const Solution* init = nullptr);

}  // namespace coagents
