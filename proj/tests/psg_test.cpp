#include <map>
#include <set>

#include "coagents/moves.hpp"
#include "coagents/psg.hpp"
#include "coagents/vrp.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace coagents;

namespace {

struct ChildHistory {
    double obj_sum = 0.0;
    double obj_sq_sum = 0.0;
    int count = 0;
};

Solution random_solution(const ProblemInstance& inst, Rng& rng) {
    return make_solution(oracle::random_routes(inst.n(), rng), inst);
}

}  // namespace

TEST_CASE("node features expose solution and offspring summaries") {
    const ProblemInstance inst = generate_instance(6, Variant::CVRP, 610);
    PSGPool pool(8);
    const int sample = pool.start_sample(make_solution({{1, 2, 3}, {4, 5, 6}}, inst));
    const int root = pool.window(sample).front();
    const Solution child_sol = make_solution({{1, 2, 3, 4}, {5, 6}}, inst);
    pool.add_node(root, 0, child_sol);

    const PSGNode& r = pool.node(root);
    const auto f = r.features(inst);
    CHECK(f[0] == doctest::Approx(r.solution.objective));
    CHECK(f[1] == 2.0);  // vehicles
    CHECK(f[2] == 6.0);  // covered customers
    CHECK(f[3] == static_cast<double>(inst.capacity()));
    CHECK(f[4] == 0.0);  // roots carry no improvement
    CHECK(f[5] == doctest::Approx(child_sol.objective));
    CHECK(f[6] == doctest::Approx(child_sol.objective * child_sol.objective));
    CHECK(f[7] == 1.0);

    const int child = pool.window(sample).back();
    CHECK(pool.node(child).improvement ==
          doctest::Approx(r.solution.objective - child_sol.objective));
}

TEST_CASE("window is FIFO-capped and splices children to roots") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 611);
    Rng rng(611);
    PSGPool pool(3);
    const int sample = pool.start_sample(random_solution(inst, rng));
    std::vector<int> added{pool.window(sample).front()};
    for (int i = 0; i < 6; ++i)
        added.push_back(pool.add_node(added.back(), i % kNumMoveKinds, random_solution(inst, rng)));

    const auto& win = pool.window(sample);
    CHECK(win.size() == 3);
    // the three newest survive, in insertion order
    CHECK(win == std::vector<int>{added[4], added[5], added[6]});
    CHECK_FALSE(pool.contains(added[0]));
    CHECK_THROWS_AS(pool.node(added[1]), std::invalid_argument);

    // the oldest survivor was spliced into a root remembering its ancestor
    const PSGNode& survivor = pool.node(added[4]);
    CHECK(survivor.parent == -1);
    CHECK(survivor.evicted_parent == added[3]);
    CHECK(pool.node(added[5]).parent == added[4]);
}

TEST_CASE("offspring aggregates are cumulative across evictions") {
    const ProblemInstance inst = generate_instance(6, Variant::CVRP, 612);
    Rng rng(612);
    PSGPool pool(5);
    std::map<int, ChildHistory> hist;
    std::vector<int> samples{pool.start_sample(random_solution(inst, rng))};
    std::vector<int> live{pool.window(samples[0]).front()};

    for (int step = 0; step < 4000; ++step) {
        // pick any live node as parent; occasionally start a fresh sample
        if (rng.index(50) == 0) {
            const int s = pool.start_sample(random_solution(inst, rng),
                                            live[rng.index(live.size())]);
            samples.push_back(s);
            live.push_back(pool.window(s).front());
            continue;
        }
        const int parent = live[rng.index(live.size())];
        const Solution sol = random_solution(inst, rng);
        ChildHistory& h = hist[parent];
        h.obj_sum += sol.objective;
        h.obj_sq_sum += sol.objective * sol.objective;
        ++h.count;
        live.push_back(pool.add_node(parent, static_cast<int>(rng.index(kNumMoveKinds)), sol));
        live.erase(std::remove_if(live.begin(), live.end(),
                                  [&](int id) { return !pool.contains(id); }),
                   live.end());
    }

    int verified = 0;
    for (int s : samples) {
        CHECK(static_cast<int>(pool.window(s).size()) <= pool.cap());
        for (int id : pool.window(s)) {
            const PSGNode& n = pool.node(id);
            const ChildHistory h = hist.count(id) ? hist[id] : ChildHistory{};
            CHECK(n.child_obj_sum == doctest::Approx(h.obj_sum).epsilon(1e-12));
            CHECK(n.child_obj_sq_sum == doctest::Approx(h.obj_sq_sum).epsilon(1e-12));
            CHECK(n.child_count == h.count);
            CHECK(static_cast<int>(n.children.size()) + n.evicted_children == h.count);
            ++verified;
        }
    }
    CHECK(verified > 0);
}

TEST_CASE("jump edges connect samples at the pool level") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 613);
    Rng rng(613);
    PSGPool pool(4);
    const int s0 = pool.start_sample(random_solution(inst, rng));
    const int origin = pool.window(s0).front();
    const int s1 = pool.start_sample(random_solution(inst, rng), origin);
    REQUIRE(pool.jump_edges().size() == 1);
    CHECK(pool.jump_edges()[0].first == origin);
    CHECK(pool.jump_edges()[0].second == pool.window(s1).front());
    CHECK_THROWS_AS(pool.start_sample(random_solution(inst, rng), 999), std::invalid_argument);
    CHECK_THROWS_AS(PSGPool(0), std::invalid_argument);
}

TEST_CASE("full window exposes live parent-child edges") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 614);
    Rng rng(614);
    PSGPool pool(8);
    const int sample = pool.start_sample(random_solution(inst, rng));
    const int root = pool.window(sample).front();
    const int a = pool.add_node(root, 2, random_solution(inst, rng));
    const int b = pool.add_node(root, 4, random_solution(inst, rng));
    const int c = pool.add_node(a, 1, random_solution(inst, rng));
    (void)b;
    (void)c;

    const SubgraphView view = full_window(pool, sample);
    CHECK(view.node_ids == pool.window(sample));
    REQUIRE(view.edges.size() == 3);
    // edges reference window indices, carry the move kind
    CHECK(view.edges[1] == std::array<int, 3>{0, 2, 4});
    CHECK(view.edges[2] == std::array<int, 3>{1, 3, 1});
}

TEST_CASE("random windows are connected subsets within the cap") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 615);
    Rng rng(615);
    PSGPool pool(32);
    const int sample = pool.start_sample(random_solution(inst, rng));
    std::vector<int> ids{pool.window(sample).front()};
    for (int i = 0; i < 30; ++i)
        ids.push_back(pool.add_node(ids[rng.index(ids.size())],
                                    static_cast<int>(rng.index(kNumMoveKinds)),
                                    random_solution(inst, rng)));

    for (int trial = 0; trial < 200; ++trial) {
        const int cap = 1 + static_cast<int>(rng.index(12));
        const SubgraphView view = random_window(pool, sample, rng, cap);
        REQUIRE(!view.node_ids.empty());
        CHECK(static_cast<int>(view.node_ids.size()) <= cap);

        // connectivity over the view's undirected edges
        const std::size_t k = view.node_ids.size();
        std::vector<std::set<std::size_t>> adj(k);
        for (const auto& e : view.edges) {
            CHECK(e[0] >= 0);
            CHECK(e[1] >= 0);
            CHECK(e[0] < static_cast<int>(k));
            CHECK(e[1] < static_cast<int>(k));
            CHECK(e[2] >= 0);
            CHECK(e[2] <= kJumpEdgeIndex);
            adj[static_cast<std::size_t>(e[0])].insert(static_cast<std::size_t>(e[1]));
            adj[static_cast<std::size_t>(e[1])].insert(static_cast<std::size_t>(e[0]));
        }
        std::set<std::size_t> seen{0};
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            for (std::size_t nb : adj[cur])
                if (seen.insert(nb).second) stack.push_back(nb);
        }
        CHECK(seen.size() == k);
    }

    // a large cap returns the whole live window
    const SubgraphView whole = random_window(pool, sample, rng, 64);
    CHECK(whole.node_ids.size() == pool.window(sample).size());
}

TEST_CASE("random walk positions match dense matrix powers") {
    const ProblemInstance inst = generate_instance(5, Variant::CVRP, 616);
    Rng rng(616);
    for (int trial = 0; trial < 25; ++trial) {
        PSGPool pool(16);
        const int sample = pool.start_sample(random_solution(inst, rng));
        std::vector<int> ids{pool.window(sample).front()};
        const int extra = 1 + static_cast<int>(rng.index(14));
        for (int i = 0; i < extra; ++i)
            ids.push_back(pool.add_node(ids[rng.index(ids.size())],
                                        static_cast<int>(rng.index(kNumMoveKinds)),
                                        random_solution(inst, rng)));
        const SubgraphView view = full_window(pool, sample);
        const auto got = random_walk_positions(view, 8);
        const auto want = oracle::walk_returns_dense(view, 8);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].size() == want[i].size());
            for (std::size_t j = 0; j < got[i].size(); ++j)
                CHECK(got[i][j] == doctest::Approx(want[i][j]).epsilon(1e-12));
        }
    }

    // single node: no edges, all-zero row
    PSGPool pool(4);
    const int sample = pool.start_sample(random_solution(inst, rng));
    const auto rows = random_walk_positions(full_window(pool, sample), 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<double>(5, 0.0));
}

TEST_CASE("psg json lists live nodes and jump edges") {
    const ProblemInstance inst = generate_instance(4, Variant::CVRP, 617);
    Rng rng(617);
    PSGPool pool(8);
    const int s0 = pool.start_sample(random_solution(inst, rng));
    const int root = pool.window(s0).front();
    pool.add_node(root, 3, random_solution(inst, rng));
    pool.start_sample(random_solution(inst, rng), root);

    const auto j = nlohmann::json::parse(psg_to_json(pool, inst));
    REQUIRE(j.at("samples").size() == 2);
    CHECK(j.at("samples")[0].at("nodes").size() == 2);
    CHECK(j.at("samples")[1].at("nodes").size() == 1);
    CHECK(j.at("jump_edges").size() == 1);
}
