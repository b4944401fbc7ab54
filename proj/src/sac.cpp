#include "vecaoi/sac.hpp"

#include <algorithm>
#include <cmath>

namespace vecaoi {

State build_state(const ObservationInputs& in, const ScenarioConfig& config) {
    const double gain_db = 10.0 * std::log10(std::max(in.gain, 1e-30));
    return State{
        gain_db / config.gain_db_norm,
        in.head_aoi / config.aoi_norm,
        in.system_aoi / config.aoi_norm,
        in.distance / config.rsu_radius,
        in.head_size / config.task_size_max,
        static_cast<double>(in.vehicle_count) / config.count_norm,
    };
}

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, RngStream& rng) const {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.index(data_.size());
    return idx;
}

Batch Batch::gather(const ReplayBuffer& buffer, std::span<const std::size_t> indices) {
    const auto n = static_cast<Eigen::Index>(indices.size());
    Batch b{Matrix(kStateDim, n), Vector(n), Vector(n), Matrix(kStateDim, n)};
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& t = buffer.at(indices[static_cast<std::size_t>(c)]);
        for (int r = 0; r < kStateDim; ++r) {
            b.states(r, c) = t.state[r];
            b.next_states(r, c) = t.next_state[r];
        }
        b.actions(c) = t.action;
        b.rewards(c) = t.reward;
    }
    return b;
}

std::vector<int> actor_widths(const ScenarioConfig& config) { return {kStateDim, config.hidden, config.hidden, 2}; }

std::vector<int> critic_widths(const ScenarioConfig& config) {
    return {kCriticInput, config.hidden, config.hidden, 1};
}

SacModel SacModel::create(const ScenarioConfig& config, RngStream& rng) {
    SacModel m;
    m.actor = make_mlp(actor_widths(config), Activation::relu, rng);
    m.critic1 = make_mlp(critic_widths(config), Activation::relu, rng);
    m.critic2 = make_mlp(critic_widths(config), Activation::relu, rng);
    m.target1 = m.critic1;
    m.target2 = m.critic2;
    m.log_temperature = std::log(config.init_temperature);
    m.reset_optimizers(config);
    return m;
}

void SacModel::reset_optimizers(const ScenarioConfig& config) {
    actor_opt = AdamState::for_params(actor.params, config.lr_actor);
    critic1_opt = AdamState::for_params(critic1.params, config.lr_critic);
    critic2_opt = AdamState::for_params(critic2.params, config.lr_critic);
    temperature_opt = ScalarAdam{};
    temperature_opt.lr = config.lr_temperature;
    updates = 0;
}

Matrix state_matrix(std::span<const State> states) {
    Matrix m(kStateDim, static_cast<Eigen::Index>(states.size()));
    for (std::size_t c = 0; c < states.size(); ++c)
        for (int r = 0; r < kStateDim; ++r) m(r, static_cast<Eigen::Index>(c)) = states[c][r];
    return m;
}

Matrix critic_input(const Matrix& states, const Vector& actions, double p_max) {
    Matrix x(kCriticInput, states.cols());
    x.topRows(kStateDim) = states;
    x.row(kStateDim) = (actions / p_max).transpose();
    return x;
}

double select_action(const SacModel& model, const State& state, RngStream& rng, bool explore,
                     const ScenarioConfig& config) {
    Matrix x(kStateDim, 1);
    for (int r = 0; r < kStateDim; ++r) x(r, 0) = state[r];
    const Matrix out = mlp_forward(model.actor, x);
    if (!explore) return deterministic_action(out(0, 0), config.p_max);
    return sample_squashed_gaussian(out(0, 0), out(1, 0), rng, config.p_max).action;
}

std::vector<SquashedSample> actor_samples(const SacModel& model, const Matrix& states, std::span<const double> noise,
                                          double p_max) {
    const Matrix out = mlp_forward(model.actor, states);
    std::vector<SquashedSample> samples(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        samples[static_cast<std::size_t>(c)] =
            squash_gaussian(out(0, c), out(1, c), noise[static_cast<std::size_t>(c)], p_max);
    return samples;
}

Vector compute_targets(const SacModel& model, const Matrix& next_states, const Vector& rewards, double gamma,
                       std::span<const double> noise, double p_max) {
    const auto n = next_states.cols();
    if (gamma == 0.0) return rewards;
    const auto samples = actor_samples(model, next_states, noise, p_max);
    Vector actions(n);
    for (Eigen::Index c = 0; c < n; ++c) actions(c) = samples[static_cast<std::size_t>(c)].action;
    const Matrix x = critic_input(next_states, actions, p_max);
    const Matrix q1 = mlp_forward(model.target1, x);
    const Matrix q2 = mlp_forward(model.target2, x);
    const double beta = model.temperature();
    Vector y(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double soft_q = std::min(q1(0, c), q2(0, c)) - beta * samples[static_cast<std::size_t>(c)].log_prob;
        y(c) = rewards(c) + gamma * soft_q;
    }
    return y;
}

LossGrad critic_loss(const Mlp& critic, const Matrix& states, const Vector& actions, const Vector& targets,
                     double p_max) {
    ForwardCache cache;
    const Matrix q = mlp_forward(critic, critic_input(states, actions, p_max), &cache);
    const double n = static_cast<double>(states.cols());
    const Matrix residual = q - targets.transpose();
    LossGrad out;
    out.loss = residual.squaredNorm() / n;
    out.grad = mlp_backward(critic, cache, (2.0 / n) * residual).params;
    return out;
}

LossGrad actor_loss(const SacModel& model, const Matrix& states, std::span<const double> noise, double p_max) {
    const auto n = states.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    ForwardCache actor_cache;
    const Matrix out = mlp_forward(model.actor, states, &actor_cache);

    std::vector<SquashedSample> samples(static_cast<std::size_t>(n));
    Vector actions(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        samples[static_cast<std::size_t>(c)] =
            squash_gaussian(out(0, c), out(1, c), noise[static_cast<std::size_t>(c)], p_max);
        actions(c) = samples[static_cast<std::size_t>(c)].action;
    }

    ForwardCache c1_cache, c2_cache;
    const Matrix x = critic_input(states, actions, p_max);
    const Matrix q1 = mlp_forward(model.critic1, x, &c1_cache);
    const Matrix q2 = mlp_forward(model.critic2, x, &c2_cache);

    // d min(Q1,Q2) / d a through whichever critic is active per sample
    Matrix pick1 = Matrix::Zero(1, n), pick2 = Matrix::Zero(1, n);
    const double beta = model.temperature();
    double loss = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        const bool first = q1(0, c) <= q2(0, c);
        (first ? pick1 : pick2)(0, c) = 1.0;
        loss += beta * samples[static_cast<std::size_t>(c)].log_prob - (first ? q1(0, c) : q2(0, c));
    }
    const Matrix dx1 = mlp_backward(model.critic1, c1_cache, pick1).input;
    const Matrix dx2 = mlp_backward(model.critic2, c2_cache, pick2).input;

    Matrix dout = Matrix::Zero(2, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& s = samples[static_cast<std::size_t>(c)];
        const double dq_da = (dx1(kStateDim, c) + dx2(kStateDim, c)) / p_max;
        const double da_draw = (1.0 - s.squashed * s.squashed) * 0.5 * p_max;
        const double dl_draw = (beta * 2.0 * s.squashed - dq_da * da_draw) * inv_n;
        dout(0, c) = dl_draw;
        const double log_std = out(1, c);
        if (log_std > kLogStdMin && log_std < kLogStdMax) {
            const double eps = noise[static_cast<std::size_t>(c)];
            dout(1, c) = -beta * inv_n + dl_draw * std::exp(log_std) * eps;
        }
    }
    LossGrad result;
    result.loss = loss * inv_n;
    result.grad = mlp_backward(model.actor, actor_cache, dout).params;
    return result;
}

ScalarLossGrad temperature_loss(const SacModel& model, const Matrix& states, std::span<const double> noise,
                                double target_entropy, double p_max) {
    const auto samples = actor_samples(model, states, noise, p_max);
    double g = 0.0;
    for (const auto& s : samples) g += -s.log_prob - target_entropy;
    g /= static_cast<double>(samples.size());
    return {model.log_temperature * g, g};
}

namespace {

std::vector<double> draw_noise(std::size_t n, RngStream& rng) {
    std::vector<double> eps(n);
    for (auto& e : eps) e = rng.normal();
    return eps;
}

}  // namespace

CriticLosses update_critics(SacModel& model, const Batch& batch, double gamma, RngStream& rng,
                            const ScenarioConfig& config, double* target_loss) {
    const auto noise = draw_noise(batch.size(), rng);
    const Vector y = compute_targets(model, batch.next_states, batch.rewards, gamma, noise, config.p_max);
    if (target_loss) {
        const Matrix x = critic_input(batch.states, batch.actions, config.p_max);
        const double n = static_cast<double>(batch.size());
        const double t1 = (mlp_forward(model.target1, x) - y.transpose()).squaredNorm() / n;
        const double t2 = (mlp_forward(model.target2, x) - y.transpose()).squaredNorm() / n;
        *target_loss = 0.5 * (t1 + t2);
    }
    auto l1 = critic_loss(model.critic1, batch.states, batch.actions, y, config.p_max);
    auto l2 = critic_loss(model.critic2, batch.states, batch.actions, y, config.p_max);
    adam_step(model.critic1.params, l1.grad, model.critic1_opt);
    adam_step(model.critic2.params, l2.grad, model.critic2_opt);
    return {l1.loss, l2.loss};
}

double update_actor(SacModel& model, const Batch& batch, RngStream& rng, const ScenarioConfig& config) {
    const auto noise = draw_noise(batch.size(), rng);
    auto lg = actor_loss(model, batch.states, noise, config.p_max);
    adam_step(model.actor.params, lg.grad, model.actor_opt);
    return lg.loss;
}

double update_temperature(SacModel& model, const Batch& batch, RngStream& rng, const ScenarioConfig& config) {
    const auto noise = draw_noise(batch.size(), rng);
    const auto lg = temperature_loss(model, batch.states, noise, config.target_entropy, config.p_max);
    model.log_temperature = adam_step(model.log_temperature, lg.grad, model.temperature_opt);
    return model.temperature();
}

std::optional<TrainLosses> local_train(SacModel& model, const ReplayBuffer& buffer, int iterations,
                                       RngStream& rng, const ScenarioConfig& config) {
    if (buffer.size() < static_cast<std::size_t>(config.warmup) || buffer.size() == 0) return std::nullopt;
    TrainLosses losses;
    for (int it = 0; it < iterations; ++it) {
        const auto idx = buffer.sample_indices(static_cast<std::size_t>(config.batch_size), rng);
        const Batch batch = Batch::gather(buffer, idx);
        update_temperature(model, batch, rng, config);
        losses.actor = update_actor(model, batch, rng, config);
        const bool last = it + 1 == iterations;
        const auto c = update_critics(model, batch, config.discount, rng, config,
                                      last ? &losses.target_critic : nullptr);
        losses.critic = 0.5 * (c.critic1 + c.critic2);
        ++model.updates;
        ++losses.iterations;
        if (model.updates % config.target_update_period == 0) {
            soft_update(model.target1.params, model.critic1.params, config.tau1);
            soft_update(model.target2.params, model.critic2.params, config.tau2);
            ++losses.target_updates;
        }
    }
    return losses;
}

}  // namespace vecaoi
