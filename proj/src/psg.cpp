#include "coagents/psg.hpp"

#include <algorithm>
#include <stdexcept>

#include "coagents/kernels.hpp"
#include "coagents/moves.hpp"
#include "json.hpp"

namespace coagents {

std::array<double, 8> PSGNode::features(const ProblemInstance& inst) const {
    std::size_t covered = 0;
    for (const auto& r : solution.routes) covered += r.size();
    return {solution.objective,
            static_cast<double>(solution.routes.size()),
            static_cast<double>(covered),
            static_cast<double>(inst.capacity()),
            improvement,
            child_obj_sum,
            child_obj_sq_sum,
            static_cast<double>(child_count)};
}

PSGPool::PSGPool(int cap) : cap_(cap) {
    if (cap_ < 1) throw std::invalid_argument("PSGPool: cap must be >= 1");
}

const PSGNode& PSGPool::node(int node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end())
        throw std::invalid_argument("PSGPool: node " + std::to_string(node_id) +
                                    " is not live (never added or evicted)");
    return it->second;
}

const std::vector<int>& PSGPool::window(int sample_id) const {
    if (sample_id < 0 || sample_id >= num_samples())
        throw std::invalid_argument("PSGPool: bad sample id " + std::to_string(sample_id));
    return samples_[sample_id];
}

int PSGPool::start_sample(Solution root, int origin_node) {
    if (origin_node >= 0 && !contains(origin_node))
        throw std::invalid_argument("PSGPool: jump origin is not a live node");
    const int sid = num_samples();
    PSGNode n;
    n.id = next_node_id_++;
    n.sample = sid;
    n.solution = std::move(root);
    nodes_.emplace(n.id, std::move(n));
    samples_.push_back({next_node_id_ - 1});
    if (origin_node >= 0) jump_edges_.emplace_back(origin_node, next_node_id_ - 1);
    return sid;
}

int PSGPool::add_node(int parent_id, int edge_kind, Solution s) {
    if (edge_kind < 0 || edge_kind > kJumpEdgeIndex)
        throw std::invalid_argument("PSGPool: bad edge kind " + std::to_string(edge_kind));
    PSGNode& parent = const_cast<PSGNode&>(node(parent_id));
    const int sid = parent.sample;

    PSGNode n;
    n.id = next_node_id_++;
    n.sample = sid;
    n.parent = parent_id;
    n.edge_kind = edge_kind;
    n.improvement = parent.solution.objective - s.objective;
    n.solution = std::move(s);

    parent.children.push_back(n.id);
    ++parent.child_count;
    parent.child_obj_sum += n.solution.objective;
    parent.child_obj_sq_sum += n.solution.objective * n.solution.objective;

    const int nid = n.id;
    nodes_.emplace(nid, std::move(n));
    samples_[sid].push_back(nid);
    while (static_cast<int>(samples_[sid].size()) > cap_) evict_oldest(sid);
    return nid;
}

void PSGPool::evict_oldest(int sample_id) {
    auto& win = samples_[sample_id];
    const int victim = win.front();
    win.erase(win.begin());
    PSGNode& v = nodes_.at(victim);
    // children become window roots that remember the evicted ancestor
    for (int c : v.children) {
        PSGNode& child = nodes_.at(c);
        child.parent = -1;
        child.evicted_parent = victim;
    }
    if (v.parent >= 0) {
        PSGNode& p = nodes_.at(v.parent);
        p.children.erase(std::find(p.children.begin(), p.children.end(), victim));
        ++p.evicted_children;
    }
    nodes_.erase(victim);
}

SubgraphView full_window(const PSGPool& pool, int sample_id) {
    SubgraphView view;
    view.sample_id = sample_id;
    view.node_ids = pool.window(sample_id);
    std::map<int, int> index;
    for (std::size_t i = 0; i < view.node_ids.size(); ++i) index[view.node_ids[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < view.node_ids.size(); ++i) {
        const PSGNode& n = pool.node(view.node_ids[i]);
        if (n.parent >= 0) {
            auto it = index.find(n.parent);
            if (it != index.end())
                view.edges.push_back({it->second, static_cast<int>(i), n.edge_kind});
        }
    }
    return view;
}

SubgraphView random_window(const PSGPool& pool, int sample_id, Rng& rng, int max_nodes) {
    const auto& win = pool.window(sample_id);
    // undirected adjacency over the window (a live parent is always in the
    // same window: eviction clears the parent link)
    std::map<int, std::vector<int>> adj;
    for (int id : win) adj[id];
    for (int id : win) {
        const PSGNode& n = pool.node(id);
        if (n.parent >= 0) {
            adj[id].push_back(n.parent);
            adj[n.parent].push_back(id);
        }
    }
    const int seed = win[rng.index(win.size())];
    std::vector<int> picked;
    std::vector<int> frontier{seed};
    std::map<int, bool> seen{{seed, true}};
    while (!frontier.empty() && static_cast<int>(picked.size()) < max_nodes) {
        const int cur = frontier.front();
        frontier.erase(frontier.begin());
        picked.push_back(cur);
        std::vector<int> nb = adj[cur];
        std::sort(nb.begin(), nb.end());
        for (int x : nb)
            if (!seen[x]) {
                seen[x] = true;
                frontier.push_back(x);
            }
    }
    // keep the window's insertion order for determinism of downstream batches
    std::sort(picked.begin(), picked.end(), [&](int a, int b) {
        return std::find(win.begin(), win.end(), a) < std::find(win.begin(), win.end(), b);
    });

    SubgraphView view;
    view.sample_id = sample_id;
    view.node_ids = picked;
    std::map<int, int> index;
    for (std::size_t i = 0; i < picked.size(); ++i) index[picked[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < picked.size(); ++i) {
        const PSGNode& n = pool.node(picked[i]);
        if (n.parent >= 0) {
            auto it = index.find(n.parent);
            if (it != index.end())
                view.edges.push_back({it->second, static_cast<int>(i), n.edge_kind});
        }
    }
    return view;
}

std::vector<std::vector<double>> random_walk_positions(const SubgraphView& view, int d) {
    const int k = static_cast<int>(view.node_ids.size());
    std::vector<double> A(static_cast<std::size_t>(k) * k, 0.0);
    for (const auto& [src, dst, kind] : view.edges) {
        (void)kind;
        A[static_cast<std::size_t>(src) * k + dst] = 1.0;
        A[static_cast<std::size_t>(dst) * k + src] = 1.0;
    }
    // T = D^{-1} A, rows of isolated nodes stay zero
    std::vector<double> T(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) {
        double deg = 0.0;
        for (int j = 0; j < k; ++j) deg += A[static_cast<std::size_t>(i) * k + j];
        if (deg == 0.0) continue;
        for (int j = 0; j < k; ++j)
            T[static_cast<std::size_t>(i) * k + j] = A[static_cast<std::size_t>(i) * k + j] / deg;
    }

    std::vector<std::vector<double>> pos(k, std::vector<double>(d, 0.0));
    std::vector<double> power = T, next(static_cast<std::size_t>(k) * k);
    for (int step = 0; step < d; ++step) {
        if (step > 0) {
            std::fill(next.begin(), next.end(), 0.0);
            kern::active().matmul_nn_acc(k, k, k, power.data(), T.data(), next.data());
            power.swap(next);
        }
        for (int i = 0; i < k; ++i) pos[i][step] = power[static_cast<std::size_t>(i) * k + i];
    }
    return pos;
}

std::string psg_to_json(const PSGPool& pool, const ProblemInstance& inst) {
    nlohmann::json j;
    j["cap"] = pool.cap();
    nlohmann::json samples = nlohmann::json::array();
    for (int sid = 0; sid < pool.num_samples(); ++sid) {
        nlohmann::json nodes = nlohmann::json::array();
        for (int id : pool.window(sid)) {
            const PSGNode& n = pool.node(id);
            nlohmann::json jn;
            jn["id"] = n.id;
            jn["parent"] = n.parent;
            jn["evicted_parent"] = n.evicted_parent;
            jn["edge_kind"] = n.edge_kind;
            jn["objective"] = n.solution.objective;
            jn["routes"] = n.solution.routes;
            jn["features"] = n.features(inst);
            nodes.push_back(jn);
        }
        samples.push_back({{"sample", sid}, {"nodes", nodes}});
    }
    j["samples"] = samples;
    nlohmann::json ej = nlohmann::json::array();
    for (auto [from, to] : pool.jump_edges()) ej.push_back({from, to});
    j["jump_edges"] = ej;
    return j.dump(2) + "\n";
}

}  // namespace coagents
