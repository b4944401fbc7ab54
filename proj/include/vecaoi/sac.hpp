#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/nn.hpp"
#include "vecaoi/rng.hpp"

namespace vecaoi {

constexpr int kStateDim = 6;
constexpr int kCriticInput = kStateDim + 1;

// [gain, head AoI, system AoI, distance to RSU, head size, vehicle count],
// each normalised (see build_state).
using State = std::array<double, kStateDim>;

struct ObservationInputs {
    double gain = 0.0;         // linear power gain
    double head_aoi = 0.0;     // s, 0 for an empty queue
    double system_aoi = 0.0;   // s
    double distance = 0.0;     // m
    double head_size = 0.0;    // bits, 0 for an empty queue
    std::size_t vehicle_count = 0;
};

// Gain in dB / gain_db_norm, AoIs / aoi_norm, distance / rsu_radius,
// size / task_size_max, count / count_norm.
State build_state(const ObservationInputs& in, const ScenarioConfig& config);

struct Transition {
    State state{};
    double action = 0.0;  // W
    double reward = 0.0;
    State next_state{};
};

// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 1) : capacity_(capacity) { data_.reserve(capacity); }

    void push(const Transition& t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return data_[i]; }
    // Uniform draws with replacement.
    std::vector<std::size_t> sample_indices(std::size_t n, RngStream& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// A mini-batch in column layout (one column per transition).
struct Batch {
    Matrix states;       // kStateDim x n
    Vector actions;      // W
    Vector rewards;
    Matrix next_states;  // kStateDim x n

    std::size_t size() const { return static_cast<std::size_t>(actions.size()); }
    static Batch gather(const ReplayBuffer& buffer, std::span<const std::size_t> indices);
};

struct SacModel {
    Mlp actor;     // state -> (mean, log_std)
    Mlp critic1;   // [state, action / p_max] -> Q
    Mlp critic2;
    Mlp target1;
    Mlp target2;
    double log_temperature = 0.0;
    AdamState actor_opt;
    AdamState critic1_opt;
    AdamState critic2_opt;
    ScalarAdam temperature_opt;
    long updates = 0;

    double temperature() const { return std::exp(log_temperature); }

    // Random actor and critics; targets start equal to the critics.
    static SacModel create(const ScenarioConfig& config, RngStream& rng);
    // Fresh optimiser state for the current parameters.
    void reset_optimizers(const ScenarioConfig& config);
};

std::vector<int> actor_widths(const ScenarioConfig& config);
std::vector<int> critic_widths(const ScenarioConfig& config);

Matrix state_matrix(std::span<const State> states);
// Stacks states with normalised actions into the critic input.
Matrix critic_input(const Matrix& states, const Vector& actions, double p_max);

double select_action(const SacModel& model, const State& state, RngStream& rng, bool explore,
                     const ScenarioConfig& config);

// Squashed samples of the current actor for every column of `states`.
std::vector<SquashedSample> actor_samples(const SacModel& model, const Matrix& states, std::span<const double> noise,
                                          double p_max);

// y = r + gamma * (min(target1, target2)(s', a') - beta * log pi(a'|s')).
Vector compute_targets(const SacModel& model, const Matrix& next_states, const Vector& rewards, double gamma,
                       std::span<const double> noise, double p_max);

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// Mean squared residual of a critic against fixed targets.
LossGrad critic_loss(const Mlp& critic, const Matrix& states, const Vector& actions, const Vector& targets,
                     double p_max);

// mean(beta * log pi(a~|s) - min(Q1, Q2)(s, a~)) with a~ reparameterised by `noise`.
LossGrad actor_loss(const SacModel& model, const Matrix& states, std::span<const double> noise, double p_max);

struct ScalarLossGrad {
    double loss = 0.0;
    double grad = 0.0;  // d loss / d log_temperature
};

// log_beta * mean(-log pi(a~|s) - target_entropy).
ScalarLossGrad temperature_loss(const SacModel& model, const Matrix& states, std::span<const double> noise,
                                double target_entropy, double p_max);

struct CriticLosses {
    double critic1 = 0.0;
    double critic2 = 0.0;
};

// When `target_loss` is given it receives the target networks' residual
// against the same bootstrap targets.
CriticLosses update_critics(SacModel& model, const Batch& batch, double gamma, RngStream& rng,
                            const ScenarioConfig& config, double* target_loss = nullptr);
double update_actor(SacModel& model, const Batch& batch, RngStream& rng, const ScenarioConfig& config);
double update_temperature(SacModel& model, const Batch& batch, RngStream& rng, const ScenarioConfig& config);

struct TrainLosses {
    double actor = 0.0;
    double critic = 0.0;         // mean of both critics
    double target_critic = 0.0;  // target networks' residual on the last batch
    int iterations = 0;
    int target_updates = 0;
};

// Runs `iterations` SAC updates when the buffer holds at least `warmup`
// transitions; returns nullopt otherwise.
std::optional<TrainLosses> local_train(SacModel& model, const ReplayBuffer& buffer, int iterations,
                                       RngStream& rng, const ScenarioConfig& config);

}  // namespace vecaoi
