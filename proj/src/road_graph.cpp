#include "vecaoi/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace vecaoi {

int RoadGraph::edge_count() const {
    int n = 0;
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
        for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j) n += adjacency(i, j) ? 1 : 0;
    return n;
}

Matrix RoadGraph::propagation() const {
    const auto n = features.rows();
    Matrix p = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int degree = 0;
        for (Eigen::Index j = 0; j < n; ++j) degree += adjacency(i, j) ? 1 : 0;
        if (degree == 0) continue;
        for (Eigen::Index j = 0; j < n; ++j)
            if (adjacency(i, j)) p(i, j) += 1.0 / degree;
    }
    return p;
}

void RoadGraph::finalize() {
    input = gnn_input(features);
    propagator = propagation();
}

int segment_node(double x, int lane, const ScenarioConfig& config) {
    const int per_lane = config.segments_per_lane();
    int seg = static_cast<int>(std::floor((x + config.rsu_radius) / config.segment_len));
    seg = std::clamp(seg, 0, per_lane - 1);
    return lane * per_lane + seg;
}

std::vector<std::size_t> vehicles_in_range(std::span<const VehicleState> vehicles, std::size_t i,
                                           const ScenarioConfig& config) {
    std::vector<std::size_t> out;
    const Point p = vehicles[i].position(config);
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
        if (j == i) continue;
        if (distance(p, vehicles[j].position(config)) <= config.v2v_range) out.push_back(j);
    }
    return out;
}

RoadGraph build_graph(std::span<const VehicleState> vehicles, const ScenarioConfig& config) {
    config.validate();
    const int n = config.node_count();
    RoadGraph g;
    g.features = Matrix::Zero(n, kNodeFeatures);
    g.adjacency = Adjacency::Zero(n, n);
    g.vehicle_node.resize(vehicles.size());

    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const auto& v = vehicles[i];
        const int node = segment_node(v.x, v.lane, config);
        g.vehicle_node[i] = node;
        g.features(node, 0) += 1.0;
        g.features(node, 1) += static_cast<double>(v.local_agg_count);
        g.features(node, 2) += v.last_losses.actor;
        g.features(node, 3) += v.last_losses.critic;
        g.features(node, 4) += v.last_losses.target_critic;
    }
    for (int node = 0; node < n; ++node) {
        const double count = g.features(node, 0);
        if (count > 0.0) g.features.block(node, 1, 1, kNodeFeatures - 1) /= count;
    }
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const Point pi = vehicles[i].position(config);
        for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
            const int a = g.vehicle_node[i], b = g.vehicle_node[j];
            if (a == b) continue;
            if (distance(pi, vehicles[j].position(config)) <= config.v2v_range) {
                g.adjacency(a, b) = 1;
                g.adjacency(b, a) = 1;
            }
        }
    }
    g.finalize();
    return g;
}

void write_graph(std::ostream& out, const RoadGraph& graph, long slot) {
    const auto n = graph.features.rows();
    out << "graph " << slot << ' ' << n << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < graph.features.cols(); ++k) out << (k ? " " : "") << graph.features(i, k);
        out << '\n';
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out << (j ? " " : "") << static_cast<int>(graph.adjacency(i, j));
        out << '\n';
    }
}

std::vector<int> gnn_widths(const ScenarioConfig& config) {
    return {kNodeFeatures, config.gnn_hidden1, config.gnn_hidden2, 1};
}

std::vector<int> gnn_critic_widths(const ScenarioConfig& config) {
    return {1 + kNodeFeatures, config.gnn_critic_hidden, config.gnn_critic_hidden, 1};
}

GnnModel GnnModel::create(const ScenarioConfig& config, RngStream& rng) {
    GnnModel m;
    m.gnn = ParamVector::random(gnn_widths(config), rng);
    m.critic = make_mlp(gnn_critic_widths(config), Activation::relu, rng);
    m.target_critic = m.critic;
    m.gnn_opt = AdamState::for_params(m.gnn, config.lr_gnn);
    m.critic_opt = AdamState::for_params(m.critic.params, config.lr_gnn_critic);
    return m;
}

Matrix gnn_input(const Matrix& features) {
    return features.unaryExpr([](double x) { return std::copysign(std::log1p(std::abs(x)), x); });
}

Vector gnn_forward(const ParamVector& gnn, const RoadGraph& graph, GnnCache* cache) {
    if (graph.input.rows() != graph.features.rows() || graph.propagator.rows() != graph.features.rows())
        throw std::logic_error("gnn_forward: graph is not finalized");
    const Matrix& p = graph.propagator;
    const auto layers = gnn.layer_count();
    if (cache) {
        cache->propagation = &p;
        cache->inputs.resize(layers);
        cache->outputs.resize(layers);
    }
    Matrix h = graph.input;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& layer = gnn.layer(l);
        Matrix m = h * layer.weight.transpose();
        m.rowwise() += layer.bias.transpose();
        Matrix z = p * m;
        if (l + 1 < layers) z = z.array().tanh().matrix();
        if (cache) {
            cache->inputs[l] = std::move(h);
            cache->outputs[l] = z;
        }
        h = std::move(z);
    }
    return h.col(0);
}

ParamVector gnn_backward(const ParamVector& gnn, const GnnCache& cache, const Vector& embedding_gradient) {
    ParamVector grad = gnn.zeros_like();
    Matrix g = embedding_gradient;  // nodes x 1
    for (std::size_t l = gnn.layer_count(); l-- > 0;) {
        if (l + 1 < gnn.layer_count()) g.array() *= 1.0 - cache.outputs[l].array().square();
        const Matrix dm = cache.propagation->transpose() * g;
        grad.layer(l).weight.noalias() = dm.transpose() * cache.inputs[l];
        grad.layer(l).bias = dm.colwise().sum().transpose();
        g = dm * gnn.layer(l).weight;
    }
    return grad;
}

Vector critic_summary(const RoadGraph& graph, const Vector& embeddings) {
    Vector s(1 + kNodeFeatures);
    s(0) = embeddings.mean();
    s.tail(kNodeFeatures) = graph.input.colwise().mean().transpose();
    return s;
}

std::vector<AggregationWeight> aggregation_weights(const Vector& embeddings, std::size_t vehicle,
                                                   std::span<const VehicleState> vehicles, const RoadGraph& graph,
                                                   const ScenarioConfig& config) {
    std::vector<AggregationWeight> out;
    out.push_back({vehicle, embeddings(graph.vehicle_node[vehicle])});
    for (std::size_t j : vehicles_in_range(vehicles, vehicle, config))
        out.push_back({j, embeddings(graph.vehicle_node[j])});
    double top = out.front().weight;
    for (const auto& w : out) top = std::max(top, w.weight);
    double sum = 0.0;
    for (auto& w : out) {
        w.weight = std::exp(w.weight - top);
        sum += w.weight;
    }
    for (auto& w : out) w.weight /= sum;
    return out;
}

void GnnReplay::push(GnnTransition t) {
    if (data_.size() < capacity_)
        data_.push_back(std::move(t));
    else
        data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
}

namespace {

Matrix stored_summaries(std::span<const GnnTransition* const> batch) {
    Matrix x(1 + kNodeFeatures, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = critic_summary(batch[i]->graph, batch[i]->embeddings);
    return x;
}

}  // namespace

Vector gnn_critic_targets(const GnnModel& model, std::span<const GnnTransition* const> batch, double gamma) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = -batch[static_cast<std::size_t>(i)]->system_aoi;
    if (gamma == 0.0) return y;
    Matrix x(1 + kNodeFeatures, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& next = batch[static_cast<std::size_t>(i)]->next_graph;
        x.col(i) = critic_summary(next, gnn_forward(model.gnn, next));
    }
    y += gamma * mlp_forward(model.target_critic, x).row(0).transpose();
    return y;
}

double gnn_critic_loss(const Mlp& critic, std::span<const GnnTransition* const> batch, const Vector& targets,
                       ParamVector* grad) {
    ForwardCache cache;
    const Matrix q = mlp_forward(critic, stored_summaries(batch), &cache);
    const double n = static_cast<double>(batch.size());
    const Matrix residual = q - targets.transpose();
    if (grad) *grad = mlp_backward(critic, cache, (2.0 / n) * residual).params;
    return residual.squaredNorm() / n;
}

double gnn_actor_loss(const ParamVector& gnn, const Mlp& critic, std::span<const GnnTransition* const> batch,
                      ParamVector* grad) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    std::vector<GnnCache> caches(batch.size());
    Matrix x(1 + kNodeFeatures, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& g = batch[static_cast<std::size_t>(i)]->graph;
        x.col(i) = critic_summary(g, gnn_forward(gnn, g, &caches[static_cast<std::size_t>(i)]));
    }
    ForwardCache cache;
    const Matrix q = mlp_forward(critic, x, &cache);
    const double loss = -q.sum() / static_cast<double>(n);
    if (grad) {
        const Matrix dx = mlp_backward(critic, cache, Matrix::Constant(1, n, -1.0 / static_cast<double>(n))).input;
        *grad = gnn.zeros_like();
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& g = batch[static_cast<std::size_t>(i)]->graph;
            const Vector d_emb = Vector::Constant(g.node_count(), dx(0, i) / g.node_count());
            grad->add_scaled(gnn_backward(gnn, caches[static_cast<std::size_t>(i)], d_emb), 1.0);
        }
    }
    return loss;
}

std::optional<GnnLosses> train_gnn(GnnModel& model, const GnnReplay& buffer, RngStream& rng,
                                   const ScenarioConfig& config) {
    if (buffer.size() < static_cast<std::size_t>(config.gnn_warmup) || buffer.size() == 0) return std::nullopt;
    GnnLosses losses;
    std::vector<const GnnTransition*> batch(static_cast<std::size_t>(config.gnn_batch_size));
    for (int it = 0; it < config.gnn_iterations; ++it) {
        for (auto& t : batch) t = &buffer.at(rng.index(buffer.size()));

        const Vector y = gnn_critic_targets(model, batch, config.discount);
        ParamVector critic_grad;
        losses.critic = gnn_critic_loss(model.critic, batch, y, &critic_grad);
        adam_step(model.critic.params, critic_grad, model.critic_opt);

        ParamVector gnn_grad;
        losses.gnn = gnn_actor_loss(model.gnn, model.critic, batch, &gnn_grad);
        adam_step(model.gnn, gnn_grad, model.gnn_opt);

        ++model.updates;
        ++losses.iterations;
        if (model.updates % config.gnn_target_update_period == 0)
            soft_update(model.target_critic.params, model.critic.params, config.tau_gnn);
    }
    return losses;
}

}  // namespace vecaoi
