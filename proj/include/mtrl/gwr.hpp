#pragma once

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtrl/common.hpp"

namespace mtrl {

using Vecf = Eigen::VectorXf;

struct GwrParams {
    float activity_threshold = 0.7f;     // a_T
    float habituation_threshold = 0.2f;  // h_T
    float eps_bmu = 0.1f;                // learning rate of the best match
    float eps_neighbor = 0.05f;          // learning rate of its neighbors
    float h0 = 1.0f;                     // initial habituation
    float alpha_bmu = 1.05f;             // habituation curve, best-match role
    float alpha_neighbor = 1.05f;
    float tau_bmu = 0.5f;
    float tau_neighbor = 2.0f;
    int max_edge_age = 80;  // kappa

    void validate() const;
};

// Appendix defaults for the three nets of the behavior hierarchy.
GwrParams gwr_params_action();     // a_T=0.7  h_T=0.2  eps 0.1/0.05 tau 0.5/2   kappa 80
GwrParams gwr_params_intention();  // a_T=0.9  h_T=0.3  eps 0.1/0.01 tau 1/2.7   kappa 100
GwrParams gwr_params_behavior();   // a_T=0.8  h_T=0.15 eps 0.1/0.01 tau 3.3/14.3 kappa 90

struct GwrNode {
    int id = -1;
    Vecf w;
    float habituation = 1.0f;
    int bmu_count = 0;       // firings in the best-match role
    int neighbor_count = 0;  // firings in the neighbor role
    std::map<int, int> edges;  // neighbor id -> age, kept symmetric
};

struct AdaptReport {
    int bmu = -1;
    int second = -1;
    float distance = 0.0f;
    float activity = 0.0f;
    bool inserted = false;
    int inserted_id = -1;
    int nodes_removed = 0;
    int edges_removed = 0;
};

class GwrNetwork {
public:
    GwrNetwork() = default;
    // Two bootstrap nodes. With no explicit range the placeholder unit-box
    // weights are remapped around the first stimulus (+-0.5 per dimension).
    GwrNetwork(int dim, GwrParams params, uint64_t seed,
               std::optional<std::pair<float, float>> init_range = std::nullopt);

    int dim() const { return dim_; }
    const GwrParams& params() const { return params_; }
    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const;
    const std::map<int, GwrNode>& nodes() const { return nodes_; }
    const GwrNode& node(int id) const;

    // best and second-best match by Euclidean distance; ties break to the
    // lower node id
    struct BmuResult {
        int best = -1;
        int second = -1;
        float best_dist = 0.0f;
        float second_dist = 0.0f;
    };
    BmuResult find_bmus(const Vecf& stimulus) const;

    static float activity(float distance);

    // One full adaptation pass for a single stimulus.
    AdaptReport adapt(const Vecf& stimulus);

    // Structure hash for purity checks: covers node ids, weights, habituation,
    // counters and edges.
    uint64_t structure_hash() const;

    std::string to_json() const;
    std::string to_dot() const;
    static GwrNetwork from_json(const std::string& text);

private:
    void bootstrap_if_needed(const Vecf& stimulus);
    void add_edge(int a, int b);
    void remove_edge(int a, int b);
    int insert_node(Vecf w);
    static float habituation_curve(float h0, float alpha, float tau, int t);

    int dim_ = 0;
    GwrParams params_;
    std::map<int, GwrNode> nodes_;
    int next_id_ = 0;
    bool pending_bootstrap_ = false;
};

}  // namespace mtrl
