#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/nn.hpp"
#include "vecaoi/scenario.hpp"

namespace vecaoi {

constexpr int kNodeFeatures = 5;

using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Road segments as graph nodes, lane-major: node = lane * segments_per_lane + segment.
// Features per node: [vehicle count, mean local-aggregation count,
// mean actor loss, mean critic loss, mean target-critic loss].
struct RoadGraph {
    Matrix features;                // nodes x kNodeFeatures
    Adjacency adjacency;            // symmetric 0/1, zero diagonal
    std::vector<int> vehicle_node;  // node of each vehicle, in input order

    int node_count() const { return static_cast<int>(features.rows()); }
    int edge_count() const;
    // I + D^-1 A: own transform plus the degree-normalised neighbour sum.
    Matrix propagation() const;

    // Derived matrices used by the GNN, filled by build_graph. Call
    // finalize() after editing features or adjacency by hand.
    Matrix input;        // gnn_input(features)
    Matrix propagator;   // propagation()
    void finalize();
};

int segment_node(double x, int lane, const ScenarioConfig& config);

// Indices of the other vehicles within v2v_range of vehicles[i].
std::vector<std::size_t> vehicles_in_range(std::span<const VehicleState> vehicles, std::size_t i,
                                           const ScenarioConfig& config);

RoadGraph build_graph(std::span<const VehicleState> vehicles, const ScenarioConfig& config);

// Text dump: "graph <slot> <nodes>", then one feature row per node, then the
// adjacency rows as space-separated 0/1.
void write_graph(std::ostream& out, const RoadGraph& graph, long slot);

struct GnnModel {
    ParamVector gnn;       // kNodeFeatures -> gnn_hidden1 -> gnn_hidden2 -> 1, tanh hidden
    Mlp critic;            // pooled graph summary -> value
    Mlp target_critic;
    AdamState gnn_opt;
    AdamState critic_opt;
    long updates = 0;

    static GnnModel create(const ScenarioConfig& config, RngStream& rng);
};

std::vector<int> gnn_widths(const ScenarioConfig& config);
std::vector<int> gnn_critic_widths(const ScenarioConfig& config);

// Node features as seen by the first GNN layer: sign(x) * log1p(|x|).
Matrix gnn_input(const Matrix& features);

struct GnnCache {
    const Matrix* propagation = nullptr;
    std::vector<Matrix> inputs;  // layer inputs, nodes x width
    std::vector<Matrix> outputs; // layer outputs after the activation
};

// Per layer: h_i = act(W h_i + b + sum_{j in N(i)} (W h_j + b) / deg(i)),
// tanh on hidden layers, identity on the final scalar layer. The graph must be
// finalized and must outlive the cache.
Vector gnn_forward(const ParamVector& gnn, const RoadGraph& graph, GnnCache* cache = nullptr);
ParamVector gnn_backward(const ParamVector& gnn, const GnnCache& cache, const Vector& embedding_gradient);

// [mean embedding, mean of gnn_input(features) per column].
Vector critic_summary(const RoadGraph& graph, const Vector& embeddings);

struct AggregationWeight {
    std::size_t vehicle;  // index into the vehicle list; the first entry is the vehicle itself
    double weight;
};

// Softmax over the node embeddings of the vehicle and of every vehicle in
// its V2V range.
std::vector<AggregationWeight> aggregation_weights(const Vector& embeddings, std::size_t vehicle,
                                                   std::span<const VehicleState> vehicles, const RoadGraph& graph,
                                                   const ScenarioConfig& config);

struct GnnTransition {
    RoadGraph graph;
    Vector embeddings;
    double system_aoi = 0.0;
    RoadGraph next_graph;
};

class GnnReplay {
public:
    explicit GnnReplay(std::size_t capacity = 1) : capacity_(capacity) {}
    void push(GnnTransition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const GnnTransition& at(std::size_t i) const { return data_[i]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<GnnTransition> data_;
};

struct GnnLosses {
    double gnn = 0.0;     // -mean Q(G, gnn(G))
    double critic = 0.0;  // mean squared TD residual
    int iterations = 0;
};

// TD targets y = -aoi + gamma * Q_target(G', gnn(G')).
Vector gnn_critic_targets(const GnnModel& model, std::span<const GnnTransition* const> batch, double gamma);

// Critic loss on stored embeddings, with gradient.
double gnn_critic_loss(const Mlp& critic, std::span<const GnnTransition* const> batch, const Vector& targets,
                       ParamVector* grad);

// -mean Q(G, gnn(G)) with gradient with respect to the GNN parameters.
double gnn_actor_loss(const ParamVector& gnn, const Mlp& critic, std::span<const GnnTransition* const> batch,
                      ParamVector* grad);

// gnn_iterations rounds of GNN and critic updates once the buffer holds
// gnn_warmup tuples; nullopt otherwise.
std::optional<GnnLosses> train_gnn(GnnModel& model, const GnnReplay& buffer, RngStream& rng,
                                   const ScenarioConfig& config);

}  // namespace vecaoi
