#include <cstdio>
#include <filesystem>
#include <set>

#include "coagents/vrp.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coagents;

TEST_CASE("evaluate agrees with the naive oracle on random route sets") {
    Rng rng(4101);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + static_cast<int>(rng.index(6));
        const Variant var = trial % 2 ? Variant::VRPTW : Variant::CVRP;
        const ProblemInstance inst = generate_instance(n, var, rng.next_u64());
        const auto routes = oracle::random_routes(n, rng);
        const auto [obj, rep] = evaluate(routes, inst);
        const oracle::NaiveEval ref = oracle::naive_eval(routes, inst);

        CHECK(obj == doctest::Approx(ref.distance).epsilon(1e-12));
        CHECK(rep.total_lateness == doctest::Approx(ref.lateness).epsilon(1e-12));
        double excess = 0.0;
        for (double e : rep.capacity_excess) excess += e;
        CHECK(excess == doctest::Approx(ref.capacity_excess).epsilon(1e-12));
        CHECK(rep.is_feasible == ref.feasible);
    }
}

TEST_CASE("evaluate flags uncovered and duplicated customers") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 9);
    const auto [obj, rep] = evaluate({{1, 2, 2}, {4}}, inst);
    (void)obj;
    CHECK(rep.uncovered == std::vector<int>{3, 5});
    CHECK(rep.duplicated == std::vector<int>{2});
    CHECK_FALSE(rep.is_feasible);
}

TEST_CASE("decision arcs anchor every route at the depot") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 10);
    const Solution s = make_solution({{3, 1}, {5}, {2, 4}}, inst);
    const std::vector<std::pair<int, int>> want{
        {0, 3}, {3, 1}, {1, 0}, {0, 5}, {5, 0}, {0, 2}, {2, 4}, {4, 0}};
    CHECK(decision_arcs(s) == want);
}

TEST_CASE("arc overlap counts shared directed arcs") {
    const std::vector<std::pair<int, int>> a{{0, 1}, {1, 2}, {2, 0}, {0, 3}};
    const std::vector<std::pair<int, int>> b{{1, 2}, {2, 1}, {0, 3}, {9, 9}};
    CHECK(arc_overlap(a, b) == 2);  // (1,2) and (0,3); direction matters
    CHECK(arc_overlap(a, {}) == 0);
}

TEST_CASE("penalized objective adds lambda per protected arc") {
    const ProblemInstance inst = generate_instance(4, Variant::CVRP, 11);
    const Solution s = make_solution({{1, 2}, {3, 4}}, inst);
    const auto arcs = decision_arcs(s);
    CHECK(penalized_objective(s, arcs, 2.5) ==
          doctest::Approx(s.objective + 2.5 * static_cast<double>(arcs.size())));
    CHECK(penalized_objective(s, {}, 2.5) == doctest::Approx(s.objective));
}

TEST_CASE("search cost penalizes lateness and overload") {
    Rng rng(4102);
    const ProblemInstance inst = generate_instance(6, Variant::VRPTW, 13);
    for (int trial = 0; trial < 50; ++trial) {
        const Solution s = make_solution(oracle::random_routes(6, rng), inst);
        const oracle::NaiveEval ref = oracle::naive_eval(s.routes, inst);
        CHECK(search_cost(s) == doctest::Approx(ref.distance + kInfeasiblePenalty *
                                                                   (ref.lateness +
                                                                    ref.capacity_excess))
                                    .epsilon(1e-12));
    }
}

TEST_CASE("make_solution drops empty routes and fingerprints structure") {
    const ProblemInstance inst = generate_instance(4, Variant::CVRP, 15);
    const Solution s = make_solution({{}, {1, 2}, {}, {3, 4}}, inst);
    CHECK(s.routes.size() == 2);

    // order inside a route matters, route boundaries matter
    const Solution t = make_solution({{2, 1}, {3, 4}}, inst);
    const Solution u = make_solution({{1, 2, 3, 4}}, inst);
    CHECK(s.fingerprint != t.fingerprint);
    CHECK(s.fingerprint != u.fingerprint);
    CHECK(s.fingerprint == make_solution({{1, 2}, {3, 4}}, inst).fingerprint);
}

TEST_CASE("generated instances are deterministic and in range") {
    for (const Variant var : {Variant::CVRP, Variant::VRPTW}) {
        const ProblemInstance a = generate_instance(12, var, 321);
        const ProblemInstance b = generate_instance(12, var, 321);
        CHECK(instance_to_json(a) == instance_to_json(b));
        CHECK(instance_to_json(a) !=
              instance_to_json(generate_instance(12, var, 322)));

        for (const Customer& c : a.customers()) {
            CHECK(c.x >= 0.0);
            CHECK(c.x <= 1.0);
            CHECK(c.y >= 0.0);
            CHECK(c.y <= 1.0);
            CHECK(c.demand >= 1);
            CHECK(c.demand <= 9);
        }
    }
}

TEST_CASE("every generated VRPTW customer is individually servable") {
    Rng rng(4103);
    for (int trial = 0; trial < 20; ++trial) {
        const ProblemInstance inst = generate_instance(10, Variant::VRPTW, rng.next_u64());
        for (const Customer& c : inst.customers()) {
            const Solution s = make_solution({{c.id}}, inst);
            CHECK(s.report.total_lateness == 0.0);
        }
    }
}

TEST_CASE("instance json round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "coagents_vrp_test";
    fs::create_directories(dir);
    const ProblemInstance inst = generate_instance(7, Variant::VRPTW, 99);
    const std::string path = (dir / "inst.json").string();
    write_instance(inst, path);
    const ProblemInstance back = read_instance(path);
    CHECK(instance_to_json(back) == instance_to_json(inst));
    CHECK(back.dist(0, 3) == inst.dist(0, 3));
    fs::remove_all(dir);
}

TEST_CASE("solution json round trip preserves routes and objective") {
    const ProblemInstance inst = generate_instance(6, Variant::CVRP, 100);
    const Solution s = make_solution({{2, 4}, {1, 6, 5}, {3}}, inst);
    const Solution back = solution_from_json(solution_to_json(s), inst);
    CHECK(back.routes == s.routes);
    CHECK(back.objective == doctest::Approx(s.objective).epsilon(1e-12));
    CHECK(back.fingerprint == s.fingerprint);
}

TEST_CASE("instance accessors reject out-of-range ids") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 7);
    CHECK_THROWS_AS(inst.customer(0), std::invalid_argument);
    CHECK_THROWS_AS(inst.customer(6), std::invalid_argument);
    CHECK_THROWS_AS(generate_instance(0, Variant::CVRP, 1), std::invalid_argument);
}
