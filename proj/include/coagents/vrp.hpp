#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coagents/rng.hpp"

namespace coagents {

enum class Variant { CVRP, VRPTW };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct Customer {
    int id = 0;  // 1-based; 0 is the depot
    double x = 0.0, y = 0.0;
    int demand = 0;
    double tw_early = 0.0, tw_late = 0.0;  // ignored for CVRP
    double service = 0.0;
};

// Depot + customers + precomputed Euclidean distance matrix (index 0 = depot).
class ProblemInstance {
  public:
    ProblemInstance(Variant variant, int capacity, double depot_x, double depot_y,
                    double depot_early, double depot_late, std::vector<Customer> customers);

    Variant variant() const { return variant_; }
    int capacity() const { return capacity_; }
    int n() const { return static_cast<int>(customers_.size()); }
    double depot_x() const { return depot_x_; }
    double depot_y() const { return depot_y_; }
    double depot_early() const { return depot_early_; }
    double depot_late() const { return depot_late_; }
    const Customer& customer(int id) const;  // id in 1..n
    const std::vector<Customer>& customers() const { return customers_; }
    // i, j in 0..n with 0 = depot
    double dist(int i, int j) const { return dist_[static_cast<std::size_t>(i) * (n() + 1) + j]; }
    int total_demand() const { return total_demand_; }
    // sum over customers of the depot round trip 2*d(0,i); scale anchor for
    // penalties and feature normalization
    double depot_round_trips() const { return depot_round_trips_; }

  private:
    Variant variant_;
    int capacity_;
    double depot_x_, depot_y_, depot_early_, depot_late_;
    std::vector<Customer> customers_;
    std::vector<double> dist_;
    int total_demand_ = 0;
    double depot_round_trips_ = 0.0;
};

struct FeasibilityReport {
    bool is_feasible = true;
    std::vector<double> capacity_excess;  // per route, max(0, load - capacity)
    int tw_violation_count = 0;
    double total_lateness = 0.0;
    std::vector<int> uncovered;   // customers missing from the solution
    std::vector<int> duplicated;  // customers appearing more than once
    // per-route detail so move candidates can be annotated incrementally
    std::vector<int> route_load;
    std::vector<double> route_lateness;
};

struct Solution {
    std::vector<std::vector<int>> routes;  // customer ids; no empty routes
    double objective = 0.0;                // total travel distance
    FeasibilityReport report;
    std::uint64_t fingerprint = 0;  // structural hash, used for staleness checks
};

// Soft-penalty weight applied to time-window lateness (and capacity excess)
// when the search ranks infeasible intermediates.
inline constexpr double kInfeasiblePenalty = 1e4;

// objective + kInfeasiblePenalty * (total lateness + total capacity excess);
// equals the objective for feasible covering solutions
double search_cost(const Solution& s);

std::pair<double, FeasibilityReport> evaluate(const std::vector<std::vector<int>>& routes,
                                              const ProblemInstance& inst);

// Drops empty routes, evaluates, fingerprints.
Solution make_solution(std::vector<std::vector<int>> routes, const ProblemInstance& inst);

std::uint64_t routes_fingerprint(const std::vector<std::vector<int>>& routes);

// Directed depot-anchored arcs (from, to) traversed by the solution, 0 = depot.
// One arc per consecutive pair plus depot departure/return per route.
std::vector<std::pair<int, int>> decision_arcs(const Solution& s);

// |I(s) ∩ protected| where both sides are arc lists as produced above
int arc_overlap(const std::vector<std::pair<int, int>>& a,
                const std::vector<std::pair<int, int>>& b);

// evaluate(s).objective + lambda * |I(s) ∩ protected|
double penalized_objective(const Solution& s, const std::vector<std::pair<int, int>>& protected_arcs,
                           double lambda);

// Uniform coordinates in the unit square, integer demands in [1, 9], capacity
// tiered by n; VRPTW windows guarantee each customer is individually servable
// from the depot within the horizon.
ProblemInstance generate_instance(int n, Variant variant, std::uint64_t seed);

ProblemInstance read_instance(const std::string& path);
void write_instance(const ProblemInstance& inst, const std::string& path);
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text, const std::string& origin);

std::string solution_to_json(const Solution& s);
Solution solution_from_json(const std::string& text, const ProblemInstance& inst);

}  // namespace coagents
