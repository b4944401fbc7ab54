#pragma once

#include <span>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/federated.hpp"
#include "vecaoi/scenario.hpp"

namespace vecaoi {

// GFSAC: the store becomes the pairwise mean of itself and the uploaded
// model, and the vehicle re-downloads the result (replay and optimiser
// state are kept).
void gfsac_on_train_complete(VehicleState& vehicle, GlobalModelStore& store);

// LFSAC: uniform weights 1/(n+1) over self and n in-range vehicles.
std::vector<double> lfsac_weights(std::size_t neighbours);

struct GdbrInput {
    double head_aoi = 0.0;  // s
    bool has_task = false;
};

struct GdbrOutput {
    std::vector<double> probabilities;
    std::vector<double> powers;  // W
};

// Best-response surrogate: benefit b = head_aoi / max(system_aoi, slot),
// price c = mean of the others' previous probabilities,
// q = clamp(b - kappa * c, 0, 1), power q * p_max. Empty queues get q = 0.
// `previous` is aligned with `inputs`; new vehicles carry 0.
GdbrOutput gdbr_step(std::span<const GdbrInput> inputs, std::span<const double> previous, double system_aoi,
                     const ScenarioConfig& config);

}  // namespace vecaoi
