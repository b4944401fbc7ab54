#pragma once

#include <optional>
#include <vector>

#include "vecaoi/aoi.hpp"
#include "vecaoi/channel.hpp"
#include "vecaoi/config.hpp"
#include "vecaoi/rng.hpp"
#include "vecaoi/sac.hpp"

namespace vecaoi {

struct LossSnapshot {
    double actor = 0.0;
    double critic = 0.0;
    double target_critic = 0.0;
};

struct VehicleState {
    long id = 0;
    int lane = 0;
    double x = 0.0;       // m, road spans [-rsu_radius, rsu_radius]
    double speed = 0.0;   // m/s, fixed for the lifetime
    double next_task_time = 0.0;
    ChannelState channel;
    TaskQueue queue;
    SacModel sac;
    ReplayBuffer replay;
    int iterations = 1;          // local SAC iterations per training round
    long local_agg_count = 0;    // times this vehicle joined a local aggregation
    LossSnapshot last_losses;    // zeros until the first training round

    // observation/action of the previous slot, completed into a transition
    // once the next state is observed
    std::optional<Transition> pending;
    double last_power = 0.0;
    double offload_probability = 0.0;  // GDBR surrogate only

    Point position(const ScenarioConfig& config) const { return {x, config.lane_y(lane)}; }
};

// Per-lane Poisson arrival clocks.
struct ArrivalProcess {
    std::vector<double> next_arrival;  // s, +inf for a lane with zero rate

    static ArrivalProcess start(const ScenarioConfig& config, RngStream& rng, double now = 0.0);
};

// Vehicles whose lane clock fires in [now, now + slot). New vehicles sit at
// x = -rsu_radius with fresh channel state and an iteration count drawn from
// iteration_choices; their models are filled in by the federated layer.
std::vector<VehicleState> advance_arrivals(ArrivalProcess& arrivals, const ScenarioConfig& config, RngStream& rng,
                                           double now, long& next_id);

// Moves every vehicle by speed * slot; vehicles past +rsu_radius are removed
// from `vehicles` and returned.
std::vector<VehicleState> advance_positions(std::vector<VehicleState>& vehicles, const ScenarioConfig& config);

// Appends a task of Uniform[task_size_min, task_size_max] bits when the
// vehicle's task clock has fired, then redraws the clock.
std::optional<double> generate_task(VehicleState& vehicle, RngStream& rng, double now, const ScenarioConfig& config);

}  // namespace vecaoi
