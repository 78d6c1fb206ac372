#pragma once

#include <optional>
#include <vector>

#include "coagents/model.hpp"
#include "coagents/psg.hpp"
#include "coagents/rng.hpp"
#include "coagents/vrp.hpp"

namespace coagents {

struct BeamConfig {
    int n_beam = 16;
    bool argmax = false;  // deterministic top-k extension instead of sampling
};

// Successor-probability decoding around a seed solution: routes of s0 are
// scored by their mean arc probability under P, the three weakest are dropped
// (all of them when s0 has fewer than four), and the freed customers are
// re-sequenced by a beam over P. P is (n+1)x(n+1) row-major with row/column 0
// the depot. Returns nullopt when no candidate completes.
std::optional<Solution> constrained_beam_search(const std::vector<double>& P, const Solution& s0,
                                                const ProblemInstance& inst, const BeamConfig& cfg,
                                                Rng& rng);

// Fallback decode: follow row argmax of P with a visited mask, closing a route
// on depot-argmax or when the row is exhausted.
Solution greedy_probability_decode(const std::vector<double>& P, const ProblemInstance& inst);

// Runs the jump head of `model` on `anchor_node` within its sample window,
// then decodes with the beam (greedy fallback on beam failure).
Solution jump_solution(const ProblemInstance& inst, nn::Model& model, const PSGPool& pool,
                       int sample_id, int anchor_node, const BeamConfig& cfg, Rng& rng);

}  // namespace coagents
