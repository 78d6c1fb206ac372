#include <cmath>

#include "coagents/model.hpp"
#include "coagents/moves.hpp"
#include "coagents/psg.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coagents;
using namespace coagents::nn;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.d_u = 8;
    c.d_v = 8;
    c.d_z = 16;
    c.d_e = 4;
    c.d_pos = 4;
    c.d_pos_v = 4;
    c.layers = 2;
    c.tf_heads = 2;
    c.tf_hidden = 16;
    c.e2e_heads = 2;
    c.jump_heads = 2;
    return c;
}

// window with a short improving chain recorded on a generated instance
struct Fixture {
    ProblemInstance inst;
    PSGPool pool;
    int sample;

    explicit Fixture(std::uint64_t seed, int n = 6)
        : inst(generate_instance(n, Variant::CVRP, seed)), pool(16) {
        Rng rng(seed ^ 0xabcdef);
        // singleton routes are feasible and leave plenty of room to improve
        std::vector<std::vector<int>> singles;
        for (int i = 1; i <= n; ++i) singles.push_back({i});
        Solution s = make_solution(singles, inst);
        sample = pool.start_sample(s);
        int tip = pool.window(sample).front();
        for (int i = 0; i < 5; ++i) {
            auto m = random_improving_move(s, inst, rng);
            if (!m) break;
            s = apply_move(s, *m, inst);
            tip = pool.add_node(tip, static_cast<int>(m->kind), s);
        }
    }

    BatchGraph batch(const ModelConfig& cfg) {
        return build_batch(pool, full_window(pool, sample), inst, cfg);
    }
};

}  // namespace

TEST_CASE("batches have consistent shapes and fixed normalization") {
    Fixture fx(31001);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);

    REQUIRE(g.K >= 2);
    CHECK(g.N == static_cast<std::size_t>(fx.inst.n()) + 1);
    CHECK(g.xu.size() == g.K * 8);
    CHECK(g.xv.size() == g.K * g.N * 6);
    CHECK(g.pos_u.size() == g.K * cfg.d_pos);
    CHECK(g.pos_v.size() == g.K * g.N * cfg.d_pos_v);
    CHECK(g.adj.size() == g.K * g.N * g.N);
    CHECK(g.edge_src.size() == g.K - 1);  // a chain

    // first node feature is the objective over the fixed distance scale
    const PSGNode& root = fx.pool.node(g.node_ids[0]);
    CHECK(g.xu[0] ==
          doctest::Approx(root.solution.objective / fx.inst.depot_round_trips()));

    // identical window -> byte-identical batch
    const BatchGraph h = fx.batch(cfg);
    CHECK(h.xu == g.xu);
    CHECK(h.xv == g.xv);
    CHECK(h.pos_u == g.pos_u);
    CHECK(h.pos_v == g.pos_v);
    CHECK(h.adj == g.adj);
}

TEST_CASE("snapshot windows rebuild the same batch without the pool") {
    Fixture fx(31002);
    const ModelConfig cfg = tiny_config();
    const SubgraphView view = full_window(fx.pool, fx.sample);
    const WindowData w = snapshot_window(fx.pool, view, fx.inst);
    const BatchGraph a = build_batch(fx.pool, view, fx.inst, cfg);
    const BatchGraph b = build_batch(w, fx.inst, cfg);
    CHECK(a.xu == b.xu);
    CHECK(a.xv == b.xv);
    CHECK(a.pos_u == b.pos_u);
    CHECK(a.pos_v == b.pos_v);
    CHECK(a.adj == b.adj);
    CHECK(a.edge_kind == b.edge_kind);
    // only the node ids differ: the snapshot re-indexes from zero
    std::vector<int> iota_ids(b.node_ids.size());
    for (std::size_t i = 0; i < iota_ids.size(); ++i) iota_ids[i] = static_cast<int>(i);
    CHECK(b.node_ids == iota_ids);
    CHECK(a.node_ids == view.node_ids);
}

TEST_CASE("route adjacency marks consecutive stops symmetrically") {
    const ProblemInstance inst = generate_instance(3, Variant::CVRP, 31003);
    const Solution s = make_solution({{1, 3}, {2}}, inst);
    const auto a = route_adjacency(s, 3);
    REQUIRE(a.size() == 16);
    auto at = [&](int i, int j) { return a[static_cast<std::size_t>(i) * 4 + j]; };
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) CHECK(at(i, j) == at(j, i));
    CHECK(at(0, 1) == 1.0);
    CHECK(at(1, 3) == 1.0);
    CHECK(at(3, 0) == 1.0);
    CHECK(at(0, 2) == 1.0);
    CHECK(at(1, 2) == 0.0);
    CHECK(at(2, 3) == 0.0);
    CHECK(at(1, 1) == 0.0);
}

TEST_CASE("cyclic positions are bounded waves, zero for unplaced customers") {
    CHECK(cyclic_position(0, 0, 8, 7) == std::vector<double>(8, 0.0));
    CHECK(cyclic_position(-1, 4, 8, 7) == std::vector<double>(8, 0.0));

    for (int rank = 1; rank <= 5; ++rank) {
        const auto v = cyclic_position(rank, 6, 8, 9);
        REQUIRE(v.size() == 8);
        for (double x : v) {
            CHECK(x >= -1.0 - 1e-12);
            CHECK(x <= 1.0 + 1e-12);
        }
    }
    // distinct ranks in one route get distinct encodings
    CHECK(cyclic_position(1, 6, 8, 9) != cyclic_position(2, 6, 8, 9));
    // the wave is cyclic: rank len and rank 0 coincide at every frequency
    const auto full_turn = cyclic_position(6, 6, 8, 9);
    const auto origin = cyclic_position(0, 6, 8, 9);
    (void)origin;  // rank 0 means "unplaced"; compare against an explicit turn instead
    for (std::size_t i = 0; i < full_turn.size(); ++i)
        CHECK(full_turn[i] == doctest::Approx(cyclic_position(12, 12, 8, 9)[i]).epsilon(1e-9));
}

TEST_CASE("encode emits working widths and healthy attention stats") {
    Fixture fx(31004);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);
    Model model(cfg, 99);
    const Model::Encoded enc = model.encode(g);

    CHECK(enc.u.rows() == g.K);
    CHECK(enc.u.cols() == cfg.du_work());
    CHECK(enc.v.rows() == g.K * g.N);
    CHECK(enc.v.cols() == cfg.dv_work());

    const Model::Stats st = model.stats();
    CHECK(st.attn_row_err <= 1e-7);
    CHECK(st.gate_min > -1.0);
    CHECK(st.gate_max < 1.0);
}

TEST_CASE("zero-initialized residual projections keep encode an identity") {
    Fixture fx(31005);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);
    Model model(cfg, 7);
    const Model::Encoded enc = model.encode(g);

    // expected u rows: affine(xu) with the embed weights, then positional columns
    const auto& W = model.param("embed/u/W").value();
    const auto& b = model.param("embed/u/b").value();
    for (std::size_t k = 0; k < g.K; ++k) {
        for (std::size_t o = 0; o < cfg.d_u; ++o) {
            double want = b[o];
            for (std::size_t i = 0; i < 8; ++i) want += W[o * 8 + i] * g.xu[k * 8 + i];
            CHECK(std::abs(enc.u.value()[k * cfg.du_work() + o] - want) <= 1e-12);
        }
        for (std::size_t o = 0; o < cfg.d_pos; ++o)
            CHECK(enc.u.value()[k * cfg.du_work() + cfg.d_u + o] ==
                  doctest::Approx(g.pos_u[k * cfg.d_pos + o]).epsilon(1e-12));
    }

    const auto& Wv = model.param("embed/v/W").value();
    const auto& bv = model.param("embed/v/b").value();
    for (std::size_t r = 0; r < g.K * g.N; r += 5) {
        for (std::size_t o = 0; o < cfg.d_v; ++o) {
            double want = bv[o];
            for (std::size_t i = 0; i < 6; ++i) want += Wv[o * 6 + i] * g.xv[r * 6 + i];
            CHECK(std::abs(enc.v.value()[r * cfg.dv_work() + o] - want) <= 1e-12);
        }
    }
}

TEST_CASE("select head yields probabilities for nodes and kind pairs") {
    Fixture fx(31006);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);
    Model model(cfg, 123);
    const Model::SelectOut out = model.forward_select(g);

    CHECK(out.node_prob.rows() == g.K);
    CHECK(out.node_prob.cols() == 1);
    CHECK(out.pair_prob.rows() == g.K);
    CHECK(out.pair_prob.cols() == static_cast<std::size_t>(kNumMoveKinds));
    for (double p : out.node_prob.value()) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    for (double p : out.pair_prob.value()) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("jump head rows are distributions with an exactly zero diagonal") {
    Fixture fx(31007);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);
    Model model(cfg, 321);
    const Tensor P = model.forward_jump(g, g.K - 1);

    REQUIRE(P.rows() == g.N);
    REQUIRE(P.cols() == g.N);
    for (std::size_t i = 0; i < g.N; ++i) {
        CHECK(P.value()[i * g.N + i] == 0.0);
        double row = 0.0;
        for (std::size_t j = 0; j < g.N; ++j) row += P.value()[i * g.N + j];
        CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(model.forward_jump(g, g.K), std::invalid_argument);
}

TEST_CASE("parameter snapshots round-trip into an identical model") {
    Fixture fx(31008);
    const ModelConfig cfg = tiny_config();
    const BatchGraph g = fx.batch(cfg);
    Model a(cfg, 11);
    Model b(cfg, 22);

    const auto pa = a.forward_select(g).node_prob.value();
    CHECK(b.forward_select(g).node_prob.value() != pa);  // different seeds differ
    b.load_values(a.values());
    CHECK(b.forward_select(g).node_prob.value() == pa);

    CHECK_THROWS_AS(a.param("missing/W"), std::logic_error);
}

TEST_CASE("model construction is seed-deterministic") {
    const ModelConfig cfg = tiny_config();
    Model a(cfg, 5), b(cfg, 5);
    CHECK(a.values() == b.values());
}

TEST_CASE("config validation rejects inconsistent widths") {
    ModelConfig c = tiny_config();
    c.d_pos_v = 3;  // must be even: entries come in sin/cos pairs
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    ModelConfig h = tiny_config();
    h.tf_hidden = 17;  // not divisible by tf_heads
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);

    ModelConfig z = tiny_config();
    z.layers = 0;
    CHECK_THROWS_AS(z.validate(), std::invalid_argument);

    CHECK_NOTHROW(ModelConfig::full().validate());
    CHECK_NOTHROW(ModelConfig::small().validate());
}
