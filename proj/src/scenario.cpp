#include "vecaoi/scenario.hpp"

#include <limits>

namespace vecaoi {

ArrivalProcess ArrivalProcess::start(const ScenarioConfig& config, RngStream& rng, double now) {
    ArrivalProcess p;
    p.next_arrival.resize(static_cast<std::size_t>(config.lanes));
    for (int l = 0; l < config.lanes; ++l) {
        const double rate = config.lane_rate(l);
        p.next_arrival[static_cast<std::size_t>(l)] =
            rate > 0.0 ? now + rng.exponential_mean(1.0 / rate) : std::numeric_limits<double>::infinity();
    }
    return p;
}

std::vector<VehicleState> advance_arrivals(ArrivalProcess& arrivals, const ScenarioConfig& config, RngStream& rng,
                                           double now, long& next_id) {
    std::vector<VehicleState> spawned;
    const double end = now + config.slot;
    for (int l = 0; l < config.lanes; ++l) {
        auto& clock = arrivals.next_arrival[static_cast<std::size_t>(l)];
        const double rate = config.lane_rate(l);
        while (clock < end) {
            VehicleState v;
            v.id = next_id++;
            v.lane = l;
            v.x = -config.rsu_radius;
            v.speed = config.lane_speed(l);
            v.next_task_time = now + rng.exponential_mean(config.task_mean_interval);
            v.channel = init_channel(v.position(config), v.speed, config, rng);
            v.iterations = config.iteration_choices[rng.index(config.iteration_choices.size())];
            v.replay = ReplayBuffer(static_cast<std::size_t>(config.buffer_size));
            spawned.push_back(std::move(v));
            clock += rng.exponential_mean(1.0 / rate);
        }
    }
    return spawned;
}

std::vector<VehicleState> advance_positions(std::vector<VehicleState>& vehicles, const ScenarioConfig& config) {
    std::vector<VehicleState> departed;
    std::vector<VehicleState> staying;
    staying.reserve(vehicles.size());
    for (auto& v : vehicles) {
        v.x += v.speed * config.slot;
        if (v.x > config.rsu_radius)
            departed.push_back(std::move(v));
        else
            staying.push_back(std::move(v));
    }
    vehicles = std::move(staying);
    return departed;
}

std::optional<double> generate_task(VehicleState& vehicle, RngStream& rng, double now, const ScenarioConfig& config) {
    if (vehicle.next_task_time > now) return std::nullopt;
    const double size = config.task_size_min == config.task_size_max
                            ? config.task_size_min
                            : rng.uniform(config.task_size_min, config.task_size_max);
    vehicle.queue.push(size);
    vehicle.next_task_time = now + rng.exponential_mean(config.task_mean_interval);
    return size;
}

}  // namespace vecaoi
