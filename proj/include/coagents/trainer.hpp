#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coagents/checkpoint.hpp"
#include "coagents/dataset.hpp"
#include "coagents/model.hpp"

namespace coagents::nn {

struct AdamConfig {
    double lr0 = 1e-4;
    double decay = 0.998;  // applied once per `decay_every` completed steps
    int decay_every = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// lr0 * decay^(completed / decay_every), integer division
double learning_rate(const AdamConfig& cfg, long long completed_steps);

// Adaptive-moment optimizer over the model's named parameters. Gradients
// accumulate on the parameters themselves; step() consumes and applies them.
class Adam {
  public:
    explicit Adam(Model& model, AdamConfig cfg = {});

    void load_state(const OptimizerState& st);  // resume from a checkpoint
    const OptimizerState& state() const { return state_; }
    long long steps_done() const { return state_.step; }

    void zero_grad();
    void step();

  private:
    Model& model_;
    AdamConfig cfg_;
    OptimizerState state_;
};

// Joint node/pair cross entropy for one labeled window: BCE over the node
// sigmoids plus BCE over all (node, kind) pair sigmoids, one positive each.
Tensor select_loss(const Model& model, const BatchGraph& g, int label_node, int label_kind);

// Closest-target cross entropy: pick the target successor matrix with the
// smallest L1 distance to the decoded probabilities (first index on ties,
// reported via `chosen`), then BCE over all off-diagonal entries.
Tensor jump_loss(const Model& model, const BatchGraph& g, std::size_t anchor,
                 const std::vector<std::vector<double>>& targets, int* chosen = nullptr);

struct TrainConfig {
    AdamConfig adam;
    long long max_steps = 5000;
    std::size_t batch_size = 48;
    long long checkpoint_every = 1000;
    std::uint64_t seed = 1;
    std::string out_dir;        // empty: train in memory, write nothing
    double val_fraction = 0.0;  // held-out tail of the shuffled sample order
    long long val_every = 50;   // steps between val_loss refreshes
};

struct TrainResult {
    long long steps = 0;
    double final_loss = 0.0;  // batch loss of the last step
    std::string checkpoint_path;
    std::string curve_path;
};

// Minibatch loops with per-sample gradient accumulation (each sample's loss
// is scaled by 1/batch, so the step optimizes the batch mean). Loss curves go
// to <out_dir>/loss.csv as (step, lr, loss, val_loss); checkpoints to
// <out_dir>/checkpoint.json. A non-finite loss aborts with the last written
// checkpoint intact. Pass `opt` to resume; training continues to
// cfg.max_steps total steps.
TrainResult train_select(Model& model, const SelectionDataset& data, const TrainConfig& cfg,
                         Adam* opt = nullptr);
TrainResult train_jump(Model& model, const JumpDataset& data, const TrainConfig& cfg,
                       Adam* opt = nullptr);

}  // namespace coagents::nn
