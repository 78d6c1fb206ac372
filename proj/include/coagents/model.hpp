#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coagents/moves.hpp"
#include "coagents/psg.hpp"
#include "coagents/tensor.hpp"
#include "coagents/vrp.hpp"

namespace coagents::nn {

// Architecture widths. `full()` is the configuration used for real runs,
// `small()` a cheap one for tests and quick experiments. Optimizer settings
// live with the trainer; this struct is frozen into checkpoints.
struct ModelConfig {
    std::size_t d_u = 64;       // graph-node embedding width
    std::size_t d_v = 64;       // route-row embedding width
    std::size_t d_z = 128;      // fused per-node state width
    std::size_t d_e = 16;       // edge-kind embedding width
    std::size_t d_pos = 8;      // random-walk positional entries per graph node
    std::size_t d_pos_v = 8;    // cyclic positional entries per route row (even)
    std::size_t layers = 3;     // encoder block count
    std::size_t tf_heads = 16;  // graph-level attention heads
    std::size_t tf_hidden = 256;
    std::size_t e2e_heads = 4;  // route-level attention heads
    std::size_t jump_heads = 4;

    static ModelConfig full();
    static ModelConfig small();

    // widths after the positional channels are appended
    std::size_t du_work() const { return d_u + d_pos; }
    std::size_t dv_work() const { return d_v + d_pos_v; }
    void validate() const;  // throws std::invalid_argument

    bool operator==(const ModelConfig&) const = default;
};

// One subgraph window flattened for the network. Row layout of the route
// features: node k occupies rows [k*N, (k+1)*N), row 0 of each block is the
// depot, row i is customer i. All features are already normalized by fixed
// instance-level scales (distances by the sum of depot round trips, demands
// by the vehicle capacity, times by the horizon, coordinates by the largest
// magnitude), so identical windows produce identical batches.
struct BatchGraph {
    std::size_t K = 0;  // window nodes
    std::size_t N = 0;  // rows per node: depot + customers
    std::vector<int> node_ids;    // pool ids, index-aligned with the window
    std::vector<double> xu;       // K x 8 node features
    std::vector<double> xv;       // (K*N) x 6 route-row features
    std::vector<double> pos_u;    // K x d_pos random-walk returns
    std::vector<double> pos_v;    // (K*N) x d_pos_v cyclic route positions
    std::vector<int> edge_src;    // window indices, parent side
    std::vector<int> edge_dst;    // window indices, child side
    std::vector<int> edge_kind;   // 0..kNumMoveKinds (last = jump/restart)
    std::vector<double> adj;      // K x N x N route adjacency, depot included
};

// Self-contained snapshot of a window: enough to rebuild batches after the
// pool is gone, so datasets can be serialized and reloaded.
struct WindowData {
    std::vector<Solution> solutions;
    std::vector<std::array<double, 8>> features;  // raw global features per node
    std::vector<std::array<int, 3>> edges;        // (src index, dst index, kind)
};

WindowData snapshot_window(const PSGPool& pool, const SubgraphView& view,
                           const ProblemInstance& inst);
BatchGraph build_batch(const WindowData& w, const ProblemInstance& inst, const ModelConfig& cfg);
BatchGraph build_batch(const PSGPool& pool, const SubgraphView& view,
                       const ProblemInstance& inst, const ModelConfig& cfg);

// route adjacency used by the encoder; exposed for tests
std::vector<double> route_adjacency(const Solution& s, int n);
// triangle-wave sin/cos features of a route position with frequencies spaced
// geometrically from 1 to `rows`; rank is 1-based, len counts the depot slot
// (so rank/len < 1 for customers), rank <= 0 yields the all-zero vector
std::vector<double> cyclic_position(int rank, int len, std::size_t d, int rows);

// Encoder plus the two decoding heads. Parameters are named leaf tensors;
// every forward builds a fresh tape over them, so gradients accumulate across
// calls until the caller clears them.
class Model {
  public:
    Model(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::map<std::string, Tensor>& params() { return params_; }
    const std::map<std::string, Tensor>& params() const { return params_; }
    Tensor& param(const std::string& name);  // throws on unknown name

    // flat copies for checkpointing
    std::map<std::string, std::vector<double>> values() const;
    void load_values(const std::map<std::string, std::vector<double>>& vals);

    struct Encoded {
        Tensor u;  // K x du_work
        Tensor v;  // (K*N) x dv_work
    };
    Encoded encode(const BatchGraph& g) const;

    struct SelectOut {
        Tensor node_prob;  // K x 1, independent Bernoullis
        Tensor pair_prob;  // K x kNumMoveKinds
    };
    SelectOut forward_select(const BatchGraph& g) const;

    // successor probabilities over the rows of window node k; each row is a
    // distribution over the other rows (diagonal exactly 0)
    Tensor forward_jump(const BatchGraph& g, std::size_t k) const;

    // invariants observed during the latest encode()
    struct Stats {
        double gate_min = 0.0;
        double gate_max = 0.0;
        double attn_row_err = 0.0;  // max |row sum - 1| over all attention maps
    };
    const Stats& stats() const { return stats_; }

  private:
    Tensor p(const std::string& name) const;
    Tensor fuse(const std::string& prefix, const Tensor& u, const Tensor& v, std::size_t N) const;
    void core_block(std::size_t l, const BatchGraph& g, Tensor& u, Tensor& v) const;

    ModelConfig cfg_;
    std::map<std::string, Tensor> params_;
    mutable Stats stats_;
};

}  // namespace coagents::nn
