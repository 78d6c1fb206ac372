#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coagents/rng.hpp"
#include "coagents/vrp.hpp"

namespace coagents {

// One explored solution. Offspring aggregates are cumulative: they keep
// counting children that have since been evicted from the window.
struct PSGNode {
    int id = -1;
    int sample = -1;
    Solution solution;
    int parent = -1;          // live parent node id, -1 for roots
    int edge_kind = -1;       // MoveKind index or kJumpEdgeIndex; -1 for true roots
    int evicted_parent = -1;  // external reference once the parent left the window
    double improvement = 0.0;  // parent objective - own objective, 0 for roots
    double child_obj_sum = 0.0;
    double child_obj_sq_sum = 0.0;
    int child_count = 0;           // children ever attached
    std::vector<int> children;     // children still in the window
    int evicted_children = 0;

    // fixed 8-entry global feature layout:
    // [objective, #vehicles, #customers, capacity, improvement,
    //  sum child objectives, sum child objectives^2, child count]
    std::array<double, 8> features(const ProblemInstance& inst) const;
};

// Forest of samples. Each sample is a connected component whose live node set
// is a FIFO window of at most `cap` nodes; evicting a node splices its
// children into window roots that remember the evicted ancestor. Jump edges
// connect samples and live in the pool-level edge set.
class PSGPool {
  public:
    explicit PSGPool(int cap = 64);

    int cap() const { return cap_; }

    // New sample rooted at `root`. origin_node >= 0 records a jump edge
    // (origin_node -> new root); origin must be a live node.
    int start_sample(Solution root, int origin_node = -1);

    // Child of parent_id via edge_kind; returns the new node id and applies
    // the FIFO cap to the parent's sample.
    int add_node(int parent_id, int edge_kind, Solution s);

    bool contains(int node_id) const { return nodes_.count(node_id) > 0; }
    const PSGNode& node(int node_id) const;
    int num_samples() const { return static_cast<int>(samples_.size()); }
    // live node ids of one sample, in insertion order
    const std::vector<int>& window(int sample_id) const;
    const std::vector<std::pair<int, int>>& jump_edges() const { return jump_edges_; }
    int total_added() const { return next_node_id_; }

  private:
    void evict_oldest(int sample_id);

    int cap_;
    int next_node_id_ = 0;
    std::map<int, PSGNode> nodes_;          // live nodes only
    std::vector<std::vector<int>> samples_;  // per sample: live ids, oldest first
    std::vector<std::pair<int, int>> jump_edges_;
};

// Connected node subset of one sample window, with the induced move edges.
struct SubgraphView {
    int sample_id = -1;
    std::vector<int> node_ids;                // insertion order
    std::vector<std::array<int, 3>> edges;    // (src index, dst index, edge kind)
};

SubgraphView full_window(const PSGPool& pool, int sample_id);

// Uniform seed node, then breadth-first growth over undirected edges up to
// max_nodes; always connected, the whole component when it is small enough.
SubgraphView random_window(const PSGPool& pool, int sample_id, Rng& rng, int max_nodes = 64);

// Row i = (T^1_ii, ..., T^d_ii) with T = D^{-1} A over the view's symmetrized
// adjacency; isolated nodes get all-zero rows.
std::vector<std::vector<double>> random_walk_positions(const SubgraphView& view, int d);

// Node table + jump edge list as JSON.
std::string psg_to_json(const PSGPool& pool, const ProblemInstance& inst);

}  // namespace coagents
