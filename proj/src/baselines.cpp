#include "vecaoi/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace vecaoi {

void gfsac_on_train_complete(VehicleState& vehicle, GlobalModelStore& store) {
    const std::vector<double> half{0.5, 0.5};
    auto blend = [&](Mlp& global, Mlp& local) {
        const std::vector<const ParamVector*> ps{&global.params, &local.params};
        global.params = weighted_average(ps, half);
        local.params = global.params;
    };
    auto& m = vehicle.sac;
    blend(store.actor, m.actor);
    blend(store.critic1, m.critic1);
    blend(store.critic2, m.critic2);
    blend(store.target1, m.target1);
    blend(store.target2, m.target2);
    store.log_temperature = 0.5 * (store.log_temperature + m.log_temperature);
    m.log_temperature = store.log_temperature;
    ++store.version;
}

std::vector<double> lfsac_weights(std::size_t neighbours) {
    return std::vector<double>(neighbours + 1, 1.0 / static_cast<double>(neighbours + 1));
}

GdbrOutput gdbr_step(std::span<const GdbrInput> inputs, std::span<const double> previous, double system_aoi,
                     const ScenarioConfig& config) {
    if (inputs.size() != previous.size()) throw std::invalid_argument("gdbr_step: input and probability counts differ");
    const std::size_t n = inputs.size();
    double total = 0.0;
    for (double q : previous) total += q;

    GdbrOutput out;
    out.probabilities.assign(n, 0.0);
    out.powers.assign(n, 0.0);
    const double denom = std::max(system_aoi, config.slot);
    for (std::size_t i = 0; i < n; ++i) {
        if (!inputs[i].has_task) continue;
        const double benefit = inputs[i].head_aoi / denom;
        const double price = n > 1 ? (total - previous[i]) / static_cast<double>(n - 1) : 0.0;
        const double q = std::clamp(benefit - config.gdbr_kappa * price, 0.0, 1.0);
        out.probabilities[i] = q;
        out.powers[i] = q * config.p_max;
    }
    return out;
}

}  // namespace vecaoi
