#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coagents/rng.hpp"
#include "coagents/vrp.hpp"

namespace coagents {

// The six neighborhood operators. The numeric values are stable: they index
// the move-kind embedding table in checkpoints and the edge-kind field of
// serialized search graphs.
enum class MoveKind : int {
    RelocateOne = 0,
    SwapOneOne = 1,
    TwoOptIntra = 2,
    TwoOptStar = 3,
    OrOptSeg2 = 4,
    CrossExchange = 5,
};

inline constexpr int kNumMoveKinds = 6;
// embedding slot for transitions that are not one of the six moves
// (beam-search jumps, destroy-repair steps in recorded trajectories)
inline constexpr int kJumpEdgeIndex = kNumMoveKinds;

std::string move_kind_name(MoveKind k);
MoveKind move_kind_from_name(const std::string& s);

// One concrete candidate. Operand meaning by kind (positions are 0-based
// customer positions; a target route index equal to routes.size() denotes a
// fresh route):
//   RelocateOne   {r1, i, r2, j}  move r1[i], reinsert at j (index within r2
//                                 after removal when r1 == r2)
//   SwapOneOne    {r1, i, r2, j}  exchange r1[i] and r2[j], (r1,i) < (r2,j)
//   TwoOptIntra   {r, i, j, -1}   reverse positions i..j of route r, i < j
//   TwoOptStar    {r1, i, r2, j}  r1 keeps first i customers + tail of r2
//                                 from j; r2 keeps first j + tail of r1, r1 < r2
//   OrOptSeg2     {r1, i, r2, j}  move segment (i, i+1) of r1 so it starts at
//                                 position j of r2 (index after removal when
//                                 r1 == r2)
//   CrossExchange {r1, i, r2, j}  swap segment (i, i+1) of r1 with (j, j+1)
//                                 of r2, r1 < r2
struct MoveApplication {
    MoveKind kind;
    std::array<int, 4> operands{-1, -1, -1, -1};
    double delta = 0.0;       // objective change from edge-exchange arithmetic
    double cost_delta = 0.0;  // search_cost change (includes penalty terms)
    bool resulting_feasible = false;
    std::uint64_t source_fingerprint = 0;
};

// Complete candidate list for one kind, sorted most-improving first
// (ties broken on operands for determinism).
std::vector<MoveApplication> enumerate_moves(const Solution& s, const ProblemInstance& inst,
                                             MoveKind kind);

// Applies a candidate enumerated on exactly this solution; throws
// std::invalid_argument when the fingerprint shows the candidate is stale.
Solution apply_move(const Solution& s, const MoveApplication& m, const ProblemInstance& inst);

// Uniformly samples a kind, then a candidate of that kind, up to max_draws
// times; returns the first strictly improving candidate whose result is
// feasible, or nullopt.
std::optional<MoveApplication> random_improving_move(const Solution& s,
                                                     const ProblemInstance& inst, Rng& rng,
                                                     int max_draws = 200);

// Best strictly improving feasible candidate across all six kinds, or nullopt
// when s is a six-neighborhood local optimum.
std::optional<MoveApplication> best_improving_move(const Solution& s, const ProblemInstance& inst);

}  // namespace coagents
