#include "coagents/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace coagents::nn {

double learning_rate(const AdamConfig& cfg, long long completed_steps) {
    return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(completed_steps / cfg.decay_every));
}

Adam::Adam(Model& model, AdamConfig cfg) : model_(model), cfg_(cfg) {
    for (const auto& [name, p] : model_.params()) {
        state_.m[name].assign(p.size(), 0.0);
        state_.v[name].assign(p.size(), 0.0);
    }
}

void Adam::load_state(const OptimizerState& st) {
    for (const auto& [name, p] : model_.params()) {
        const auto mi = st.m.find(name), vi = st.v.find(name);
        if (mi == st.m.end() || vi == st.v.end() || mi->second.size() != p.size() ||
            vi->second.size() != p.size())
            throw std::runtime_error("optimizer state does not match parameter '" + name + "'");
    }
    state_ = st;
}

void Adam::zero_grad() {
    for (auto& [name, p] : model_.params()) p.zero_grad();
}

void Adam::step() {
    const double lr = learning_rate(cfg_, state_.step);
    const double t = static_cast<double>(state_.step + 1);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    for (auto& [name, p] : model_.params()) {
        auto& m = state_.m[name];
        auto& v = state_.v[name];
        const std::vector<double>& g = p.grad();
        std::vector<double>& w = p.raw();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = i < g.size() ? g[i] : 0.0;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
        }
    }
    ++state_.step;
}

Tensor select_loss(const Model& model, const BatchGraph& g, int label_node, int label_kind) {
    if (label_node < 0 || static_cast<std::size_t>(label_node) >= g.K)
        throw std::invalid_argument("select_loss: label node out of range");
    if (label_kind < 0 || label_kind >= kNumMoveKinds)
        throw std::invalid_argument("select_loss: label kind out of range");
    const Model::SelectOut out = model.forward_select(g);
    std::vector<double> y_node(g.K, 0.0);
    y_node[static_cast<std::size_t>(label_node)] = 1.0;
    std::vector<double> y_pair(g.K * kNumMoveKinds, 0.0);
    y_pair[static_cast<std::size_t>(label_node) * kNumMoveKinds + label_kind] = 1.0;
    return add(bce_sum(out.node_prob, y_node), bce_sum(out.pair_prob, y_pair));
}

Tensor jump_loss(const Model& model, const BatchGraph& g, std::size_t anchor,
                 const std::vector<std::vector<double>>& targets, int* chosen) {
    if (targets.empty()) throw std::invalid_argument("jump_loss: no targets");
    const Tensor P = model.forward_jump(g, anchor);
    const std::vector<double>& p = P.value();
    const std::size_t N = g.N;
    std::vector<unsigned char> off_diag(N * N, 1);
    for (std::size_t i = 0; i < N; ++i) off_diag[i * N + i] = 0;

    std::size_t best = 0;
    double best_dist = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k].size() != N * N)
            throw std::invalid_argument("jump_loss: target size mismatch");
        double dist = 0.0;
        for (std::size_t i = 0; i < N * N; ++i)
            if (off_diag[i]) dist += std::abs(targets[k][i] - p[i]);
        dist *= 0.5;
        if (k == 0 || dist < best_dist) {
            best = k;
            best_dist = dist;
        }
    }
    if (chosen) *chosen = static_cast<int>(best);
    return bce_sum(P, targets[best], &off_diag);
}

namespace {

struct CurveWriter {
    std::ofstream out;
    explicit CurveWriter(const std::string& path) {
        if (path.empty()) return;
        out.open(path);
        if (!out) throw std::runtime_error("trainer: cannot write " + path);
        out << "step,lr,loss,val_loss\n";
    }
    void row(long long step, double lr, double loss, double val) {
        if (!out.is_open()) return;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g\n", step, lr, loss, val);
        out << buf;
    }
};

// Shared minibatch loop; `loss_of` builds the graph-building loss for one
// sample index.
template <typename LossFn>
TrainResult run_training(Model& model, std::size_t n_samples, const TrainConfig& cfg, Adam* opt,
                         LossFn&& loss_of) {
    if (n_samples == 0) throw std::invalid_argument("trainer: empty dataset");
    Adam local(model, cfg.adam);
    Adam& adam = opt ? *opt : local;
    Rng rng(cfg.seed);

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    auto n_val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(n_samples));
    if (n_val >= n_samples) n_val = n_samples - 1;
    if (n_val > 0) rng.shuffle(order);  // split off a deterministic tail
    std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    order.resize(n_samples - n_val);

    TrainResult res;
    res.curve_path = cfg.out_dir.empty() ? "" : cfg.out_dir + "/loss.csv";
    const std::string ckpt_path = cfg.out_dir.empty() ? "" : cfg.out_dir + "/checkpoint.json";
    CurveWriter curve(res.curve_path);

    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1),
                                                    order.size());
    std::size_t cursor = order.size();  // forces a shuffle before the first batch
    double val_loss = 0.0;
    bool have_val = false;

    while (adam.steps_done() < cfg.max_steps) {
        adam.zero_grad();
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            Tensor li = loss_of(order[cursor++]);
            batch_loss += li.item();
            backward(scale(li, 1.0 / static_cast<double>(batch)));
        }
        batch_loss /= static_cast<double>(batch);
        if (!std::isfinite(batch_loss))
            throw std::runtime_error(
                "trainer: non-finite loss at step " + std::to_string(adam.steps_done() + 1) +
                (res.checkpoint_path.empty() ? " (no checkpoint written)"
                                             : "; last good checkpoint: " + res.checkpoint_path));
        const double lr = learning_rate(cfg.adam, adam.steps_done());
        adam.step();
        res.steps = adam.steps_done();
        res.final_loss = batch_loss;

        if (!val.empty() &&
            (!have_val || (cfg.val_every > 0 && res.steps % cfg.val_every == 0))) {
            val_loss = 0.0;
            for (std::size_t idx : val) val_loss += loss_of(idx).item();
            val_loss /= static_cast<double>(val.size());
            have_val = true;
        }
        curve.row(res.steps, lr, batch_loss, val.empty() ? batch_loss : val_loss);

        if (!ckpt_path.empty() && (res.steps % std::max<long long>(cfg.checkpoint_every, 1) == 0 ||
                                   res.steps == cfg.max_steps)) {
            save_checkpoint(ckpt_path, model, &adam.state());
            res.checkpoint_path = ckpt_path;
        }
    }
    return res;
}

}  // namespace

TrainResult train_select(Model& model, const SelectionDataset& data, const TrainConfig& cfg,
                         Adam* opt) {
    std::vector<BatchGraph> graphs;
    graphs.reserve(data.samples.size());
    for (const SelectSample& s : data.samples) {
        if (s.instance_index < 0 ||
            static_cast<std::size_t>(s.instance_index) >= data.instances.size())
            throw std::invalid_argument("trainer: sample instance index out of range");
        graphs.push_back(
            build_batch(s.window, data.instances[s.instance_index], model.config()));
    }
    return run_training(model, data.samples.size(), cfg, opt, [&](std::size_t i) {
        return select_loss(model, graphs[i], data.samples[i].label_node,
                           data.samples[i].label_kind);
    });
}

TrainResult train_jump(Model& model, const JumpDataset& data, const TrainConfig& cfg, Adam* opt) {
    std::vector<BatchGraph> graphs;
    graphs.reserve(data.samples.size());
    for (const JumpSample& s : data.samples) {
        if (s.instance_index < 0 ||
            static_cast<std::size_t>(s.instance_index) >= data.instances.size())
            throw std::invalid_argument("trainer: sample instance index out of range");
        graphs.push_back(
            build_batch(s.window, data.instances[s.instance_index], model.config()));
    }
    return run_training(model, data.samples.size(), cfg, opt, [&](std::size_t i) {
        return jump_loss(model, graphs[i], static_cast<std::size_t>(data.samples[i].anchor),
                         data.samples[i].targets);
    });
}

}  // namespace coagents::nn
