#include "vecaoi/aoi.hpp"

#include <algorithm>
#include <numeric>

namespace vecaoi {

void TaskQueue::push(double size_bits) { tasks_.push_back(Task{size_bits, size_bits, 0.0}); }

QueueStep step_queue_aoi(TaskQueue& queue, double rate, double slot) {
    QueueStep out;
    if (queue.empty()) return out;

    auto& tasks = queue.tasks();
    for (std::size_t j = 1; j < tasks.size(); ++j) tasks[j].aoi += slot;

    Task& head = tasks.front();
    if (rate > 0.0 && rate * slot >= head.size) {
        head.aoi += head.size / rate;
        out.delivered_bits = head.size;
        out.delivered_aoi = head.aoi;
        out.head_delivered = true;
        tasks.pop_front();
    } else {
        head.aoi += slot;
    }
    return out;
}

double vehicle_avg_aoi(const TaskQueue& queue) {
    if (queue.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : queue.tasks()) sum += t.aoi;
    return sum / static_cast<double>(queue.size());
}

double system_avg_aoi(std::span<const double> vehicle_averages) {
    if (vehicle_averages.empty()) return 0.0;
    return std::accumulate(vehicle_averages.begin(), vehicle_averages.end(), 0.0) /
           static_cast<double>(vehicle_averages.size());
}

double step_xi(PenaltyState& state, std::span<const double> departed_averages, std::size_t vehicle_count,
               const ScenarioConfig& config) {
    if (!departed_averages.empty()) {
        const double n = static_cast<double>(std::max<std::size_t>(vehicle_count, 1));
        state.xi += std::accumulate(departed_averages.begin(), departed_averages.end(), 0.0) / n;
    } else {
        state.xi *= config.penalty_decay;
    }
    return state.xi;
}

double reward(const RewardInputs& in, const ScenarioConfig& config) {
    double power_weight = 0.0;
    if (in.task_count > 0) {
        const double head = std::max(in.head_aoi, config.slot);
        power_weight = 1.0 + in.system_aoi / head;
    } else {
        power_weight = 1.0 + in.system_aoi;
    }
    const double cost = in.system_aoi + in.power * power_weight + in.xi * config.penalty_weight;
    return -cost * config.reward_scale;
}

}  // namespace vecaoi
