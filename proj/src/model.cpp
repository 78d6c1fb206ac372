#include "coagents/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coagents::nn {

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig ModelConfig::small() {
    ModelConfig c;
    c.d_u = 16;
    c.d_v = 16;
    c.d_z = 32;
    c.d_e = 8;
    c.d_pos = 8;
    c.d_pos_v = 8;
    c.layers = 2;
    c.tf_heads = 4;
    c.tf_hidden = 64;
    c.e2e_heads = 2;
    c.jump_heads = 2;
    return c;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("model config: " + m); };
    if (!d_u || !d_v || !d_z || !d_e || !layers || !tf_heads || !tf_hidden || !e2e_heads ||
        !jump_heads)
        fail("all widths and counts must be positive");
    if (d_pos_v % 2 != 0) fail("d_pos_v must be even (sin/cos pairs)");
    if (tf_hidden % tf_heads != 0) fail("tf_hidden must be divisible by tf_heads");
    if (dv_work() % e2e_heads != 0) fail("d_v + d_pos_v must be divisible by e2e_heads");
    if (dv_work() % jump_heads != 0) fail("d_v + d_pos_v must be divisible by jump_heads");
}

// ---- feature construction -------------------------------------------------

std::vector<double> cyclic_position(int rank, int len, std::size_t d, int rows) {
    std::vector<double> out(d, 0.0);
    if (len <= 0 || rank <= 0) return out;  // depot row / uncovered customer
    constexpr double kPi = 3.141592653589793238462643;
    const double z = 2.0 * kPi * static_cast<double>(rank) / static_cast<double>(len);
    for (std::size_t j = 0; j < d; ++j) {
        // frequencies spaced geometrically from 1 to the row count
        const double w = d > 1 ? std::pow(static_cast<double>(std::max(rows, 2)),
                                          static_cast<double>(j) / static_cast<double>(d - 1))
                               : 1.0;
        // triangle-wave phase keeps the value cyclic in the route position
        const double arg = w * std::abs(std::fmod(z, 4.0 * kPi / w) - 2.0 * kPi / w);
        out[j] = (j % 2 == 0) ? std::sin(arg) : std::cos(arg);
    }
    return out;
}

std::vector<double> route_adjacency(const Solution& s, int n) {
    const std::size_t N = static_cast<std::size_t>(n) + 1;
    std::vector<double> a(N * N, 0.0);
    for (const auto& route : s.routes) {
        int prev = 0;
        for (int c : route) {
            a[static_cast<std::size_t>(prev) * N + c] = 1.0;
            a[static_cast<std::size_t>(c) * N + prev] = 1.0;
            prev = c;
        }
        a[static_cast<std::size_t>(prev) * N] = 1.0;
        a[static_cast<std::size_t>(prev)] = 1.0;
    }
    return a;
}

WindowData snapshot_window(const PSGPool& pool, const SubgraphView& view,
                           const ProblemInstance& inst) {
    WindowData w;
    w.solutions.reserve(view.node_ids.size());
    w.features.reserve(view.node_ids.size());
    for (int id : view.node_ids) {
        const PSGNode& node = pool.node(id);
        w.solutions.push_back(node.solution);
        w.features.push_back(node.features(inst));
    }
    w.edges = view.edges;
    return w;
}

BatchGraph build_batch(const WindowData& w, const ProblemInstance& inst, const ModelConfig& cfg) {
    BatchGraph g;
    g.K = w.solutions.size();
    if (g.K == 0) throw std::invalid_argument("batch: empty window");
    if (w.features.size() != g.K)
        throw std::invalid_argument("batch: features/solutions size mismatch");
    const int n = inst.n();
    g.N = static_cast<std::size_t>(n) + 1;
    g.node_ids.resize(g.K);
    std::iota(g.node_ids.begin(), g.node_ids.end(), 0);

    // fixed instance-level scales so a window always maps to the same batch
    const double dscale = std::max(inst.depot_round_trips(), 1.0);
    const double nscale = std::max(n, 1);
    const double cap = std::max(inst.capacity(), 1);
    double cscale = std::max({std::abs(inst.depot_x()), std::abs(inst.depot_y()), 1.0});
    double horizon = inst.depot_late();
    double max_service = 0.0;
    for (const Customer& c : inst.customers()) {
        cscale = std::max({cscale, std::abs(c.x), std::abs(c.y)});
        horizon = std::max(horizon, c.tw_late);
        max_service = std::max(max_service, c.service);
    }
    horizon = std::max(horizon + max_service, 1.0);

    g.xu.reserve(g.K * 8);
    for (const auto& f : w.features) {
        g.xu.push_back(f[0] / dscale);
        g.xu.push_back(f[1] / nscale);
        g.xu.push_back(f[2] / nscale);
        g.xu.push_back(f[3] / cap);
        g.xu.push_back(f[4] / dscale);
        g.xu.push_back(f[5] / dscale);
        g.xu.push_back(f[6] / (dscale * dscale));
        g.xu.push_back(f[7] / nscale);
    }

    g.xv.reserve(g.K * g.N * 6);
    g.pos_v.reserve(g.K * g.N * cfg.d_pos_v);
    g.adj.reserve(g.K * g.N * g.N);
    for (const Solution& s : w.solutions) {
        g.xv.insert(g.xv.end(), {inst.depot_x() / cscale, inst.depot_y() / cscale, 0.0,
                                 inst.depot_early() / horizon, inst.depot_late() / horizon, 0.0});
        std::vector<double> zero_pos(cfg.d_pos_v, 0.0);
        g.pos_v.insert(g.pos_v.end(), zero_pos.begin(), zero_pos.end());

        std::vector<std::pair<int, int>> place(n + 1, {0, 0});  // (rank, len) per customer
        for (const auto& route : s.routes)
            for (std::size_t p = 0; p < route.size(); ++p)
                place[route[p]] = {static_cast<int>(p) + 1, static_cast<int>(route.size()) + 1};
        for (int i = 1; i <= n; ++i) {
            const Customer& c = inst.customer(i);
            g.xv.insert(g.xv.end(),
                        {c.x / cscale, c.y / cscale, c.demand / cap, c.tw_early / horizon,
                         c.tw_late / horizon, c.service / horizon});
            const auto pos = cyclic_position(place[i].first, place[i].second, cfg.d_pos_v,
                                             static_cast<int>(g.N));
            g.pos_v.insert(g.pos_v.end(), pos.begin(), pos.end());
        }
        const auto a = route_adjacency(s, n);
        g.adj.insert(g.adj.end(), a.begin(), a.end());
    }

    SubgraphView shape;  // random-walk features only need counts and edges
    shape.node_ids.assign(g.node_ids.begin(), g.node_ids.end());
    shape.edges = w.edges;
    const auto rw = random_walk_positions(shape, static_cast<int>(cfg.d_pos));
    g.pos_u.reserve(g.K * cfg.d_pos);
    for (const auto& row : rw) g.pos_u.insert(g.pos_u.end(), row.begin(), row.end());

    for (const auto& e : w.edges) {
        if (e[2] < 0 || e[2] > kJumpEdgeIndex)
            throw std::invalid_argument("batch: edge kind out of range");
        if (e[0] < 0 || e[0] >= static_cast<int>(g.K) || e[1] < 0 || e[1] >= static_cast<int>(g.K))
            throw std::invalid_argument("batch: edge endpoint out of range");
        g.edge_src.push_back(e[0]);
        g.edge_dst.push_back(e[1]);
        g.edge_kind.push_back(e[2]);
    }
    return g;
}

BatchGraph build_batch(const PSGPool& pool, const SubgraphView& view,
                       const ProblemInstance& inst, const ModelConfig& cfg) {
    BatchGraph g = build_batch(snapshot_window(pool, view, inst), inst, cfg);
    g.node_ids = view.node_ids;
    return g;
}

// ---- parameters ------------------------------------------------------------

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    auto dense = [&](const std::string& name, std::size_t out, std::size_t in) {
        const double a = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<double> w(out * in);
        for (double& x : w) x = rng.uniform(-a, a);
        params_.emplace(name, Tensor::param({out, in}, std::move(w)));
    };
    auto zeros = [&](const std::string& name, std::size_t out, std::size_t in) {
        params_.emplace(name, Tensor::param({out, in}, std::vector<double>(out * in, 0.0)));
    };
    auto vec = [&](const std::string& name, std::size_t len, double fill) {
        params_.emplace(name, Tensor::param({len}, std::vector<double>(len, fill)));
    };

    const std::size_t du = cfg_.du_work(), dv = cfg_.dv_work(), dz = cfg_.d_z, de = cfg_.d_e;
    dense("embed/u/W", cfg_.d_u, 8);
    vec("embed/u/b", cfg_.d_u, 0.0);
    dense("embed/v/W", cfg_.d_v, 6);
    vec("embed/v/b", cfg_.d_v, 0.0);
    dense("embed/kind", kNumMoveKinds + 1, de);

    const std::size_t Dh = cfg_.tf_hidden / cfg_.tf_heads;
    const std::size_t dk2 = dv / cfg_.e2e_heads;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string B = "block" + std::to_string(l);
        dense(B + "/ggcn/fuse/W", dz, du + dv);
        vec(B + "/ggcn/fuse/b", dz, 0.0);
        dense(B + "/ggcn/gate/Wsrc", dv, dz);
        dense(B + "/ggcn/gate/Wdst", dv, dz);
        dense(B + "/ggcn/gate/Wkind", dv, de);
        vec(B + "/ggcn/gate/b", dv, 0.0);
        dense(B + "/ggcn/H/W", dv, dv);
        vec(B + "/ggcn/H/b", dv, 0.0);
        // residual projections start at zero so a fresh model is the identity
        zeros(B + "/ggcn/out_u/Wz", du, dz);
        zeros(B + "/ggcn/out_u/Wh", du, dv);
        zeros(B + "/ggcn/out_v/W", dv, dv);

        dense(B + "/tf/fuse/W", dz, du + dv);
        vec(B + "/tf/fuse/b", dz, 0.0);
        for (std::size_t h = 0; h < cfg_.tf_heads; ++h) {
            dense(B + "/tf/head" + std::to_string(h) + "/Q", Dh, dz);
            dense(B + "/tf/head" + std::to_string(h) + "/K", Dh, dz);
        }
        zeros(B + "/tf/WU", du, du);
        zeros(B + "/tf/WV", dv, dv);
        dense(B + "/tf/ffn/W1", cfg_.tf_hidden, dv);
        vec(B + "/tf/ffn/b1", cfg_.tf_hidden, 0.0);
        zeros(B + "/tf/ffn/W2", dv, cfg_.tf_hidden);
        vec(B + "/tf/ffn/b2", dv, 0.0);
        vec(B + "/tf/ln/gamma", dv, 1.0);
        vec(B + "/tf/ln/beta", dv, 0.0);

        for (std::size_t h = 0; h < cfg_.e2e_heads; ++h) {
            const std::string H = B + "/e2e/head" + std::to_string(h);
            dense(H + "/Q", dk2, 2 * dv);
            dense(H + "/K", dk2, 2 * dv);
            dense(H + "/V", dk2, 2 * dv);
            params_.emplace(H + "/bias", Tensor::param({1, 1}, {1.0}));
        }
        zeros(B + "/e2e/WO", dv, cfg_.e2e_heads * dk2);
        dense(B + "/e2e/ffn/W1", cfg_.tf_hidden, dv);
        vec(B + "/e2e/ffn/b1", cfg_.tf_hidden, 0.0);
        zeros(B + "/e2e/ffn/W2", dv, cfg_.tf_hidden);
        vec(B + "/e2e/ffn/b2", dv, 0.0);
    }

    dense("select/fuse/W", dz, du + dv);
    vec("select/fuse/b", dz, 0.0);
    dense("select/node/W", 1, dz);
    vec("select/node/b", 1, 0.0);
    dense("select/pair/W", 1, dz + de);
    vec("select/pair/b", 1, 0.0);

    const std::size_t dkj = dv / cfg_.jump_heads;
    for (std::size_t h = 0; h < cfg_.jump_heads; ++h) {
        dense("jump/head" + std::to_string(h) + "/Q", dkj, dv);
        dense("jump/head" + std::to_string(h) + "/K", dkj, dv);
    }
}

Tensor& Model::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::logic_error("model: unknown parameter '" + name + "'");
    return it->second;
}

Tensor Model::p(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::logic_error("model: unknown parameter '" + name + "'");
    return it->second;
}

std::map<std::string, std::vector<double>> Model::values() const {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [name, t] : params_) out.emplace(name, t.value());
    return out;
}

void Model::load_values(const std::map<std::string, std::vector<double>>& vals) {
    for (const auto& [name, data] : vals)
        if (params_.find(name) == params_.end())
            throw std::runtime_error("checkpoint: unknown tensor '" + name + "'");
    for (auto& [name, t] : params_) {
        auto it = vals.find(name);
        if (it == vals.end()) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
        if (it->second.size() != t.size())
            throw std::runtime_error("checkpoint: tensor '" + name + "' has wrong size");
        t.raw() = it->second;
    }
}

// ---- forward ---------------------------------------------------------------

Tensor Model::fuse(const std::string& prefix, const Tensor& u, const Tensor& v,
                   std::size_t N) const {
    Tensor zin = concat_cols(repeat_rows(u, N), v);
    return group_mean_rows(gelu(affine(zin, p(prefix + "/W"), p(prefix + "/b"))), N);
}

namespace {

void track_row_sums(const Tensor& A, double& err) {
    const std::size_t r = A.rows(), c = A.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += A.value()[i * c + j];
        err = std::max(err, std::abs(s - 1.0));
    }
}

}  // namespace

void Model::core_block(std::size_t l, const BatchGraph& g, Tensor& u, Tensor& v) const {
    const std::string B = "block" + std::to_string(l);
    const std::size_t K = g.K, N = g.N, dv = cfg_.dv_work();
    const Tensor v_prev = v;
    const Tensor u_in = u;

    // gated message passing along the stored move edges
    Tensor z = fuse(B + "/ggcn/fuse", u, v, N);
    Tensor h = affine(v, p(B + "/ggcn/H/W"), p(B + "/ggcn/H/b"));
    Tensor hprime;  // h plus the mean gated blocks of out- and in-neighbors
    if (!g.edge_src.empty()) {
        Tensor zs = gather_rows(z, g.edge_src);
        Tensor zd = gather_rows(z, g.edge_dst);
        Tensor ek = gather_rows(p("embed/kind"), g.edge_kind);
        Tensor gate = tanh_t(add(add(affine(zs, p(B + "/ggcn/gate/Wsrc"), p(B + "/ggcn/gate/b")),
                                     affine(zd, p(B + "/ggcn/gate/Wdst"), Tensor())),
                                 affine(ek, p(B + "/ggcn/gate/Wkind"), Tensor())));
        for (double x : gate.value()) {
            stats_.gate_min = std::min(stats_.gate_min, x);
            stats_.gate_max = std::max(stats_.gate_max, x);
        }

        // each edge moves the gated row block of one endpoint to the other
        const std::size_t E = g.edge_src.size();
        std::vector<int> pay_out, recv_out, pay_in, recv_in;
        pay_out.reserve(E * N);
        recv_out.reserve(E * N);
        pay_in.reserve(E * N);
        recv_in.reserve(E * N);
        for (std::size_t e = 0; e < E; ++e)
            for (std::size_t t = 0; t < N; ++t) {
                pay_out.push_back(g.edge_dst[e] * static_cast<int>(N) + static_cast<int>(t));
                recv_out.push_back(g.edge_src[e] * static_cast<int>(N) + static_cast<int>(t));
                pay_in.push_back(g.edge_src[e] * static_cast<int>(N) + static_cast<int>(t));
                recv_in.push_back(g.edge_dst[e] * static_cast<int>(N) + static_cast<int>(t));
            }
        Tensor gateN = repeat_rows(gate, N);
        Tensor out_msg = scatter_mean_rows(mul(gather_rows(h, pay_out), gateN), recv_out, K * N);
        Tensor in_msg = scatter_mean_rows(mul(gather_rows(h, pay_in), gateN), recv_in, K * N);
        hprime = add(h, add(out_msg, in_msg));
    } else {
        hprime = h;
    }
    Tensor h_node = block_mean_cols(reshape(hprime, {K, N * dv}), N);
    Tensor u_hat = add(u, add(matmul_nt(z, p(B + "/ggcn/out_u/Wz")),
                              matmul_nt(h_node, p(B + "/ggcn/out_u/Wh"))));
    Tensor v_hat = add(v, matmul_nt(hprime, p(B + "/ggcn/out_v/W")));

    // window-wide self-attention over the fused node states
    Tensor z2 = fuse(B + "/tf/fuse", u_hat, v_hat, N);
    const std::size_t Dh = cfg_.tf_hidden / cfg_.tf_heads;
    Tensor A;
    for (std::size_t h = 0; h < cfg_.tf_heads; ++h) {
        const std::string H = B + "/tf/head" + std::to_string(h);
        Tensor q = matmul_nt(z2, p(H + "/Q"));
        Tensor kk = matmul_nt(z2, p(H + "/K"));
        Tensor Ah = softmax_rows(scale(matmul_nt(q, kk), 1.0 / std::sqrt(static_cast<double>(Dh))));
        A = A.defined() ? add(A, Ah) : Ah;
    }
    A = scale(A, 1.0 / static_cast<double>(cfg_.tf_heads));
    track_row_sums(A, stats_.attn_row_err);
    Tensor u_t = matmul(A, matmul_nt(u_hat, p(B + "/tf/WU")));
    Tensor v_mix =
        reshape(matmul(A, reshape(matmul_nt(v_hat, p(B + "/tf/WV")), {K, N * dv})), {K * N, dv});
    Tensor y = add(v_hat, v_mix);
    Tensor f = affine(gelu(affine(y, p(B + "/tf/ffn/W1"), p(B + "/tf/ffn/b1"))),
                      p(B + "/tf/ffn/W2"), p(B + "/tf/ffn/b2"));
    Tensor v_t = layer_norm_rows(add(y, f), p(B + "/tf/ln/gamma"), p(B + "/tf/ln/beta"));

    // per-solution attention over route rows, biased toward route neighbors,
    // keys drawn from both the block input and the refreshed embedding
    const std::size_t dk2 = dv / cfg_.e2e_heads;
    std::vector<Tensor> blocks;
    blocks.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        Tensor Xk = concat_cols(slice_rows(v_prev, k * N, N), slice_rows(v_t, k * N, N));
        Tensor adjk = Tensor::from(
            {N * N, 1}, std::vector<double>(g.adj.begin() + static_cast<std::ptrdiff_t>(k * N * N),
                                            g.adj.begin() + static_cast<std::ptrdiff_t>((k + 1) * N * N)));
        Tensor heads;
        for (std::size_t h = 0; h < cfg_.e2e_heads; ++h) {
            const std::string H = B + "/e2e/head" + std::to_string(h);
            Tensor q = matmul_nt(Xk, p(H + "/Q"));
            Tensor kk = matmul_nt(Xk, p(H + "/K"));
            Tensor bias = reshape(matmul(adjk, p(H + "/bias")), {N, N});
            Tensor Ah = softmax_rows(
                add(scale(matmul_nt(q, kk), 1.0 / std::sqrt(static_cast<double>(dk2))), bias));
            track_row_sums(Ah, stats_.attn_row_err);
            Tensor head = matmul(Ah, matmul_nt(Xk, p(H + "/V")));
            heads = heads.defined() ? concat_cols(heads, head) : head;
        }
        Tensor Y = matmul_nt(heads, p(B + "/e2e/WO"));
        Tensor f2 = affine(gelu(affine(Y, p(B + "/e2e/ffn/W1"), p(B + "/e2e/ffn/b1"))),
                           p(B + "/e2e/ffn/W2"), p(B + "/e2e/ffn/b2"));
        blocks.push_back(add(Y, f2));
    }
    Tensor v_bar = concat_rows(blocks);

    u = add(u_in, u_t);
    v = add(v_prev, v_bar);
}

Model::Encoded Model::encode(const BatchGraph& g) const {
    if (g.K == 0) throw std::invalid_argument("model: empty batch");
    if (g.xu.size() != g.K * 8 || g.xv.size() != g.K * g.N * 6 ||
        g.pos_u.size() != g.K * cfg_.d_pos || g.pos_v.size() != g.K * g.N * cfg_.d_pos_v ||
        g.adj.size() != g.K * g.N * g.N)
        throw std::invalid_argument("model: batch feature sizes do not match the configuration");
    stats_ = Stats{};

    Tensor xu = Tensor::from({g.K, 8}, g.xu);
    Tensor xv = Tensor::from({g.K * g.N, 6}, g.xv);
    Tensor pu = Tensor::from({g.K, cfg_.d_pos}, g.pos_u);
    Tensor pv = Tensor::from({g.K * g.N, cfg_.d_pos_v}, g.pos_v);
    Tensor u = concat_cols(affine(xu, p("embed/u/W"), p("embed/u/b")), pu);
    Tensor v = concat_cols(affine(xv, p("embed/v/W"), p("embed/v/b")), pv);
    for (std::size_t l = 0; l < cfg_.layers; ++l) core_block(l, g, u, v);
    return {u, v};
}

Model::SelectOut Model::forward_select(const BatchGraph& g) const {
    Encoded enc = encode(g);
    Tensor z = fuse("select/fuse", enc.u, enc.v, g.N);
    Tensor node_p = sigmoid(affine(z, p("select/node/W"), p("select/node/b")));

    std::vector<int> kinds(g.K * kNumMoveKinds);
    for (std::size_t i = 0; i < kinds.size(); ++i) kinds[i] = static_cast<int>(i % kNumMoveKinds);
    Tensor zrep = repeat_rows(z, kNumMoveKinds);
    Tensor emb = gather_rows(p("embed/kind"), kinds);
    Tensor pair = sigmoid(affine(concat_cols(zrep, emb), p("select/pair/W"), p("select/pair/b")));
    return {node_p, reshape(pair, {g.K, static_cast<std::size_t>(kNumMoveKinds)})};
}

Tensor Model::forward_jump(const BatchGraph& g, std::size_t k) const {
    if (k >= g.K) throw std::invalid_argument("model: jump node index out of range");
    Encoded enc = encode(g);
    Tensor vb = slice_rows(enc.v, k * g.N, g.N);
    const std::size_t N = g.N, dkj = cfg_.dv_work() / cfg_.jump_heads;
    std::vector<unsigned char> diag(N * N, 0);
    for (std::size_t i = 0; i < N; ++i) diag[i * N + i] = 1;
    Tensor P;
    for (std::size_t h = 0; h < cfg_.jump_heads; ++h) {
        const std::string H = "jump/head" + std::to_string(h);
        Tensor q = matmul_nt(vb, p(H + "/Q"));
        Tensor kk = matmul_nt(vb, p(H + "/K"));
        Tensor Ph = softmax_rows(
            scale(matmul_nt(q, kk), 1.0 / std::sqrt(static_cast<double>(dkj))), &diag);
        P = P.defined() ? add(P, Ph) : Ph;
    }
    return scale(P, 1.0 / static_cast<double>(cfg_.jump_heads));
}

}  // namespace coagents::nn
