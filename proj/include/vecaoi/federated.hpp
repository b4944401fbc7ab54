#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/nn.hpp"
#include "vecaoi/rng.hpp"
#include "vecaoi/sac.hpp"
#include "vecaoi/scenario.hpp"

namespace vecaoi {

// The RSU-held model that entering vehicles download.
struct GlobalModelStore {
    Mlp actor;
    Mlp critic1;
    Mlp critic2;
    Mlp target1;
    Mlp target2;
    double log_temperature = 0.0;
    long version = 0;

    static GlobalModelStore create(const ScenarioConfig& config, RngStream& rng);
    static GlobalModelStore from_model(const SacModel& model);
};

// Deep-copies the store networks into the vehicle, with fresh optimiser state
// and an empty replay buffer of capacity buffer_size.
void on_enter(VehicleState& vehicle, const GlobalModelStore& store, const ScenarioConfig& config);

// Element-wise weighted sum of same-shaped parameter sets.
ParamVector weighted_average(std::span<const ParamVector* const> params, std::span<const double> weights);

struct CriticPair {
    ParamVector critic1;
    ParamVector critic2;
};

// participants[0] is the vehicle's own (pre-aggregation) critic pair. Both
// critics become the weighted combination; actor and targets are untouched.
// Throws std::invalid_argument when the counts differ.
void local_aggregate(VehicleState& vehicle, std::span<const CriticPair> participants,
                     std::span<const double> weights);

// 32-bit parameters of actor, both critics and both targets.
double model_payload_bits(const SacModel& model, const ScenarioConfig& config);

// Interference-free power that moves `payload_bits` in one slot, capped at p_max.
double model_upload_power(double gain, double payload_bits, const ScenarioConfig& config);

struct UploadEvent {
    long vehicle_id = 0;
    double payload_bits = 0.0;
    double power = 0.0;  // W
    double gain = 0.0;   // linear, uploader to RSU
    long slot = 0;
};

// Store becomes the plain mean of the departing models; no-op for an empty set.
void global_aggregate(GlobalModelStore& store, std::span<const SacModel* const> departing);

struct AggregationEvent {
    long slot = 0;
    std::string type;  // "local" or "global"
    std::vector<long> participants;
    std::vector<double> weights;
};

// "<slot> <type> id:weight id:weight ..."
void write_audit(std::ostream& out, const AggregationEvent& event);

}  // namespace vecaoi
