#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "coagents/beam.hpp"
#include "coagents/brute_force.hpp"
#include "coagents/dataset.hpp"
#include "coagents/search.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coagents;

namespace {

nn::ModelConfig tiny_config() {
    nn::ModelConfig c;
    c.d_u = 8;
    c.d_v = 8;
    c.d_z = 16;
    c.d_e = 4;
    c.d_pos = 4;
    c.d_pos_v = 4;
    c.layers = 1;
    c.tf_heads = 2;
    c.tf_hidden = 16;
    c.e2e_heads = 2;
    c.jump_heads = 2;
    return c;
}

bool covering(const Solution& s, const ProblemInstance& inst) {
    return oracle::naive_eval(s.routes, inst).covering;
}

}  // namespace

TEST_CASE("checkpoint iterations split any budget into ten fractions") {
    const auto thousand = checkpoint_iters(1000);
    REQUIRE(thousand.size() == 10);
    CHECK(thousand.front() == 100);
    CHECK(thousand[4] == 500);
    CHECK(thousand.back() == 1000);

    const auto seven = checkpoint_iters(7);
    REQUIRE(seven.size() == 10);
    CHECK(seven.back() == 7);
    for (std::size_t k = 0; k < 10; ++k) {
        // k-th checkpoint fires at ceil(budget * (k+1) / 10)
        const long long want = (7 * static_cast<long long>(k + 1) + 9) / 10;
        CHECK(seven[k] == want);
    }
}

TEST_CASE("greedy constructions cover every customer") {
    Rng rng(6601);
    for (int trial = 0; trial < 12; ++trial) {
        const Variant var = trial % 2 ? Variant::VRPTW : Variant::CVRP;
        const ProblemInstance inst = generate_instance(9, var, rng.next_u64());

        const Solution nn_sol = greedy_nearest_neighbor(inst);
        CHECK(covering(nn_sol, inst));
        CHECK(nn_sol.report.is_feasible);
        CHECK(greedy_nearest_neighbor(inst).fingerprint == nn_sol.fingerprint);

        Rng r1(55), r2(55);
        const Solution a = randomized_greedy(inst, r1);
        const Solution b = randomized_greedy(inst, r2);
        CHECK(covering(a, inst));
        CHECK(a.fingerprint == b.fingerprint);
    }
}

TEST_CASE("beam search rebuilds a one-hot encoded optimum") {
    // strongly linear geometry makes the single-route tour optimal and unique
    std::vector<Customer> cs;
    for (int i = 1; i <= 5; ++i) {
        Customer c;
        c.id = i;
        c.x = 0.15 * i;
        c.y = 0.1 * (i % 2);
        c.demand = 1;
        c.tw_late = 1000.0;
        cs.push_back(c);
    }
    const ProblemInstance inst(Variant::CVRP, 50, 0.0, 0.0, 0.0, 1000.0, std::move(cs));
    const Solution opt = brute_force_optimum(inst);
    REQUIRE(opt.routes.size() == 1);

    const auto P = successor_matrix(opt, inst.n());
    const Solution seed = make_solution({{5, 3}, {1, 4, 2}}, inst);  // < 4 routes: all dropped
    BeamConfig cfg;
    cfg.argmax = true;
    Rng rng(1);
    const auto got = constrained_beam_search(P, seed, inst, cfg, rng);
    REQUIRE(got.has_value());
    CHECK(got->fingerprint == opt.fingerprint);
    CHECK(got->objective == doctest::Approx(opt.objective).epsilon(1e-12));
}

TEST_CASE("beam search keeps strong routes when the seed has four or more") {
    const ProblemInstance inst = generate_instance(8, Variant::CVRP, 6602);
    const Solution seed =
        make_solution({{1, 2}, {3, 4}, {5, 6}, {7}, {8}}, inst);
    const Solution ref = brute_force_optimum(inst);
    const auto P = successor_matrix(ref, inst.n());
    BeamConfig cfg;
    cfg.n_beam = 8;
    Rng rng(2);
    const auto got = constrained_beam_search(P, seed, inst, cfg, rng);
    REQUIRE(got.has_value());
    CHECK(covering(*got, inst));
    // two routes survive the drop; their customers keep their committed order
    std::set<std::uint64_t> kept;
    for (const auto& r : got->routes) kept.insert(routes_fingerprint({r}));
    int survivors = 0;
    for (const auto& r : seed.routes)
        if (kept.count(routes_fingerprint({r}))) ++survivors;
    CHECK(survivors >= 2);
}

TEST_CASE("beam sampling is reproducible and always covering") {
    const ProblemInstance inst = generate_instance(7, Variant::VRPTW, 6603);
    const Solution seed = greedy_nearest_neighbor(inst);
    const auto P = successor_matrix(brute_force_optimum(inst), inst.n());
    BeamConfig cfg;
    cfg.n_beam = 4;
    for (std::uint64_t s : {11u, 12u, 13u}) {
        Rng r1(s), r2(s);
        const auto a = constrained_beam_search(P, seed, inst, cfg, r1);
        const auto b = constrained_beam_search(P, seed, inst, cfg, r2);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(a->fingerprint == b->fingerprint);
        CHECK(covering(*a, inst));
    }
}

TEST_CASE("greedy probability decode follows a single-route one-hot exactly") {
    std::vector<Customer> cs;
    for (int i = 1; i <= 5; ++i) {
        Customer c;
        c.id = i;
        c.x = 0.2 * i;
        c.y = 0.05 * i;
        c.demand = 2;
        c.tw_late = 1000.0;
        cs.push_back(c);
    }
    const ProblemInstance inst(Variant::CVRP, 50, 0.0, 0.0, 0.0, 1000.0, std::move(cs));
    const Solution opt = brute_force_optimum(inst);
    REQUIRE(opt.routes.size() == 1);
    const Solution got = greedy_probability_decode(successor_matrix(opt, inst.n()), inst);
    CHECK(got.fingerprint == opt.fingerprint);

    // and still covers when the matrix is uninformative
    const std::size_t N = static_cast<std::size_t>(inst.n()) + 1;
    const Solution flat =
        greedy_probability_decode(std::vector<double>(N * N, 1.0 / static_cast<double>(N)), inst);
    CHECK(covering(flat, inst));
}

TEST_CASE("alns improves the construction and records a local-optimum chain") {
    const ProblemInstance inst = generate_instance(9, Variant::CVRP, 6604);
    PSGPool pool(64);
    const SearchResult res = alns_solve(inst, 150, 77, AlnsConfig{}, &pool);

    CHECK(res.best_feasible);
    CHECK(covering(res.best, inst));
    CHECK(res.best.objective <= greedy_nearest_neighbor(inst).objective + 1e-12);
    CHECK(res.iterations == 150);
    REQUIRE(res.checkpoint_best.size() == 10);
    for (std::size_t i = 1; i < 10; ++i)
        CHECK(res.checkpoint_best[i] <= res.checkpoint_best[i - 1] + 1e-12);
    CHECK(res.checkpoint_best.back() == doctest::Approx(res.best.objective));

    // trace: init row first, best objective never rises
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.front().action == "init");
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].best_obj <= res.trace[i - 1].best_obj + 1e-12);

    // the recorded chain ends at a six-kind local optimum
    REQUIRE(pool.num_samples() == 1);
    const auto& win = pool.window(0);
    REQUIRE(!win.empty());
    const Solution& tip = pool.node(win.back()).solution;
    CHECK(!best_improving_move(tip, inst).has_value());
    for (int id : win) CHECK(covering(pool.node(id).solution, inst));
}

TEST_CASE("alns is reproducible for a fixed seed") {
    const ProblemInstance inst = generate_instance(8, Variant::VRPTW, 6605);
    const SearchResult a = alns_solve(inst, 120, 31);
    const SearchResult b = alns_solve(inst, 120, 31);
    CHECK(a.best.fingerprint == b.best.fingerprint);
    CHECK(a.checkpoint_best == b.checkpoint_best);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].action == b.trace[i].action);
        CHECK(a.trace[i].current_obj == b.trace[i].current_obj);
    }
}

TEST_CASE("learned loop runs every variant and traces its decisions") {
    const ProblemInstance inst = generate_instance(8, Variant::CVRP, 6606);
    for (const SearchVariant v : {SearchVariant::full, SearchVariant::no_nsa,
                                  SearchVariant::no_msa, SearchVariant::no_jump}) {
        nn::Model sel(tiny_config(), 901);
        nn::Model jmp(tiny_config(), 902);
        SearchConfig cfg;
        cfg.budget_iters = 60;
        cfg.stagnation_after = 4;
        cfg.window_cap = 8;
        cfg.n_beam = 4;
        cfg.variant = v;
        cfg.seed = 5;
        const SearchResult res = coagents_solve(inst, sel, jmp, cfg);

        CHECK(res.iterations == 60);
        CHECK(res.best_feasible);
        CHECK(covering(res.best, inst));
        REQUIRE(res.checkpoint_best.size() == 10);
        CHECK(res.checkpoint_best.back() == doctest::Approx(res.best.objective));

        long long moves = 0, jumps = 0;
        for (const TraceRow& row : res.trace) {
            if (row.action.rfind("move:", 0) == 0) ++moves;
            if (row.action == "jump") ++jumps;
            if (v == SearchVariant::no_jump) CHECK(row.action != "jump");
        }
        CHECK(moves == res.moves_applied);
        if (v != SearchVariant::no_jump) CHECK(jumps == res.jumps);
    }
}

TEST_CASE("stagnation triggers jumps and opens new samples") {
    const ProblemInstance inst = generate_instance(8, Variant::CVRP, 6607);
    nn::Model sel(tiny_config(), 903);
    nn::Model jmp(tiny_config(), 904);
    SearchConfig cfg;
    cfg.budget_iters = 80;
    cfg.stagnation_after = 2;
    cfg.window_cap = 8;
    cfg.n_beam = 4;
    cfg.seed = 6;
    const SearchResult res = coagents_solve(inst, sel, jmp, cfg);
    CHECK(res.jumps >= 1);
}

TEST_CASE("learned loop is reproducible for a fixed seed") {
    const ProblemInstance inst = generate_instance(8, Variant::VRPTW, 6608);
    SearchConfig cfg;
    cfg.budget_iters = 50;
    cfg.stagnation_after = 5;
    cfg.window_cap = 8;
    cfg.n_beam = 4;
    cfg.seed = 77;

    nn::Model sel_a(tiny_config(), 905), jmp_a(tiny_config(), 906);
    nn::Model sel_b(tiny_config(), 905), jmp_b(tiny_config(), 906);
    const SearchResult a = coagents_solve(inst, sel_a, jmp_a, cfg);
    const SearchResult b = coagents_solve(inst, sel_b, jmp_b, cfg);
    CHECK(a.best.fingerprint == b.best.fingerprint);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].action == b.trace[i].action);
        CHECK(a.trace[i].current_obj == b.trace[i].current_obj);
        CHECK(a.trace[i].best_obj == b.trace[i].best_obj);
    }
}

TEST_CASE("search config is validated") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 6609);
    nn::Model sel(tiny_config(), 1), jmp(tiny_config(), 2);
    SearchConfig cfg;
    cfg.budget_iters = -1;
    CHECK_THROWS_AS(coagents_solve(inst, sel, jmp, cfg), std::invalid_argument);
    cfg.budget_iters = 10;
    cfg.stagnation_after = 0;
    CHECK_THROWS_AS(coagents_solve(inst, sel, jmp, cfg), std::invalid_argument);
    cfg.stagnation_after = 5;
    cfg.window_cap = 0;
    CHECK_THROWS_AS(coagents_solve(inst, sel, jmp, cfg), std::invalid_argument);
}

TEST_CASE("variant labels round-trip") {
    for (const SearchVariant v : {SearchVariant::full, SearchVariant::no_nsa,
                                  SearchVariant::no_msa, SearchVariant::no_jump})
        CHECK(variant_from_label(variant_label(v)) == v);
    CHECK_THROWS_AS(variant_from_label("half"), std::invalid_argument);
}

TEST_CASE("trace csv holds one line per row plus a header") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "coagents_search_test";
    fs::create_directories(dir);
    const std::vector<TraceRow> trace{{0, 5.0, 5.0, "init", 0, 0.0},
                                      {1, 4.5, 4.5, "move:relocate_one", 0, 1.25}};
    const std::string path = (dir / "trace.csv").string();
    write_trace_csv(trace, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,best_obj,current_obj,action,sample_id,elapsed_ms");
    std::getline(in, line);
    CHECK(line.rfind("0,", 0) == 0);
    CHECK(line.find("init") != std::string::npos);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    fs::remove_all(dir);
}
