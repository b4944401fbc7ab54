#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "vecaoi/config.hpp"

namespace vecaoi {

struct Task {
    double size = 0.0;       // bits
    double remaining = 0.0;  // bits still to send
    double aoi = 0.0;        // seconds
};

// FIFO of pending uploads; front() is the head task.
class TaskQueue {
public:
    void push(double size_bits);
    bool empty() const { return tasks_.empty(); }
    std::size_t size() const { return tasks_.size(); }
    const Task& head() const { return tasks_.front(); }
    const std::deque<Task>& tasks() const { return tasks_; }
    std::deque<Task>& tasks() { return tasks_; }

private:
    std::deque<Task> tasks_;
};

struct QueueStep {
    double delivered_bits = 0.0;
    double delivered_aoi = 0.0;  // final AoI of the delivered head
    bool head_delivered = false;
};

// One slot of transmission at `rate` (bits/s). Only the head transmits; it is
// delivered and removed when rate * slot covers its size, otherwise it waits.
QueueStep step_queue_aoi(TaskQueue& queue, double rate, double slot);

// Mean AoI of queued tasks, 0 for an empty queue.
double vehicle_avg_aoi(const TaskQueue& queue);

// Mean of per-vehicle averages, 0 with no vehicles.
double system_avg_aoi(std::span<const double> vehicle_averages);

struct PenaltyState {
    double xi = 0.0;
};

// Departure penalty recursion: grows by the departing vehicles' mean AoI
// divided by the vehicle count, decays by penalty_decay in quiet slots.
double step_xi(PenaltyState& state, std::span<const double> departed_averages, std::size_t vehicle_count,
               const ScenarioConfig& config);

struct RewardInputs {
    double system_aoi = 0.0;
    double head_aoi = 0.0;
    double power = 0.0;
    std::size_t task_count = 0;
    double xi = 0.0;
};

// Scaled (non-positive) per-vehicle reward.
double reward(const RewardInputs& in, const ScenarioConfig& config);

}  // namespace vecaoi
