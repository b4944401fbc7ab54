#include "vecaoi/federated.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace vecaoi {

GlobalModelStore GlobalModelStore::create(const ScenarioConfig& config, RngStream& rng) {
    return from_model(SacModel::create(config, rng));
}

GlobalModelStore GlobalModelStore::from_model(const SacModel& model) {
    GlobalModelStore s;
    s.actor = model.actor;
    s.critic1 = model.critic1;
    s.critic2 = model.critic2;
    s.target1 = model.target1;
    s.target2 = model.target2;
    s.log_temperature = model.log_temperature;
    return s;
}

void on_enter(VehicleState& vehicle, const GlobalModelStore& store, const ScenarioConfig& config) {
    auto& m = vehicle.sac;
    m.actor = store.actor;
    m.critic1 = store.critic1;
    m.critic2 = store.critic2;
    m.target1 = store.target1;
    m.target2 = store.target2;
    m.log_temperature = store.log_temperature;
    m.updates = 0;
    m.reset_optimizers(config);
    vehicle.replay = ReplayBuffer(static_cast<std::size_t>(config.buffer_size));
}

ParamVector weighted_average(std::span<const ParamVector* const> params, std::span<const double> weights) {
    if (params.empty() || params.size() != weights.size())
        throw std::invalid_argument("weighted_average: parameter and weight counts differ");
    ParamVector out = params[0]->zeros_like();
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!params[k]->same_shape(out)) throw std::invalid_argument("weighted_average: shape mismatch");
        out.add_scaled(*params[k], weights[k]);
    }
    return out;
}

void local_aggregate(VehicleState& vehicle, std::span<const CriticPair> participants,
                     std::span<const double> weights) {
    if (participants.empty() || participants.size() != weights.size())
        throw std::invalid_argument("local_aggregate: weights must cover self and every neighbour");
    std::vector<const ParamVector*> c1, c2;
    for (const auto& p : participants) {
        c1.push_back(&p.critic1);
        c2.push_back(&p.critic2);
    }
    vehicle.sac.critic1.params = weighted_average(c1, weights);
    vehicle.sac.critic2.params = weighted_average(c2, weights);
    ++vehicle.local_agg_count;
}

double model_payload_bits(const SacModel& model, const ScenarioConfig& config) {
    const std::size_t n = model.actor.params.size() + model.critic1.params.size() + model.critic2.params.size() +
                          model.target1.params.size() + model.target2.params.size();
    return static_cast<double>(config.bits_per_param) * static_cast<double>(n);
}

double model_upload_power(double gain, double payload_bits, const ScenarioConfig& config) {
    if (!(gain > 0.0)) return config.p_max;
    const double snr = std::exp2(payload_bits / (config.bandwidth * config.slot)) - 1.0;
    const double p = config.noise * snr / gain;
    if (!std::isfinite(p)) return config.p_max;
    return std::min(config.p_max, p);
}

void global_aggregate(GlobalModelStore& store, std::span<const SacModel* const> departing) {
    if (departing.empty()) return;
    const std::vector<double> w(departing.size(), 1.0 / static_cast<double>(departing.size()));
    auto mean_of = [&](auto member) {
        std::vector<const ParamVector*> ps;
        for (const SacModel* m : departing) ps.push_back(&((*m).*member).params);
        return weighted_average(ps, w);
    };
    store.actor.params = mean_of(&SacModel::actor);
    store.critic1.params = mean_of(&SacModel::critic1);
    store.critic2.params = mean_of(&SacModel::critic2);
    store.target1.params = mean_of(&SacModel::target1);
    store.target2.params = mean_of(&SacModel::target2);
    double lt = 0.0;
    for (const SacModel* m : departing) lt += m->log_temperature;
    store.log_temperature = lt / static_cast<double>(departing.size());
    ++store.version;
}

void write_audit(std::ostream& out, const AggregationEvent& event) {
    out << event.slot << ' ' << event.type;
    for (std::size_t i = 0; i < event.participants.size(); ++i)
        out << ' ' << event.participants[i] << ':' << event.weights[i];
    out << '\n';
}

}  // namespace vecaoi
