#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vecaoi {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every constant of the simulation and of the learners. Defaults are the
// desk-scale setup (2 lanes, 50k training slots, reduced network widths);
// configs/full.cfg restores the full-scale values.
struct ScenarioConfig {
    // road and traffic
    int lanes = 2;
    std::vector<double> lane_speeds;          // m/s; empty -> `speed` on every lane
    std::vector<double> lane_arrival_rates;   // veh/s; empty -> arrival_rate / lanes
    double speed = 30.0 / 3.6;
    double arrival_rate = 1.0 / 8.0;          // total over all lanes
    double rsu_radius = 250.0;
    double v2v_range = 100.0;
    double lane_spacing = 3.5;
    double rsu_x = 0.0;
    double rsu_y = 10.0;
    double slot = 0.02;

    // tasks
    double task_mean_interval = 0.2;
    double task_size_min = 8.0e5;             // 0.1 MB
    double task_size_max = 8.0e7;             // 10 MB

    // radio
    double p_max = 20.0;
    double bandwidth = 200.0e6;
    double noise = 3.98e-14;
    double shadow_sigma = 2.2;
    double decorrelation = 10.0;
    double carrier = 28.0e9;
    double lightspeed = 3.0e8;

    // road graph
    double segment_len = 50.0;

    // reward
    double penalty_decay = 0.9999;
    double penalty_weight = 0.9999;
    double reward_scale = 0.1;
    double discount = 0.99;

    // state normalisation
    double gain_db_norm = 100.0;
    double aoi_norm = 10.0;
    double count_norm = 50.0;

    // run lengths, in slots
    long train_slots = 50000;
    long test_slots = 10000;

    // SAC
    int hidden = 32;                          // full scale: 256
    double lr_actor = 1e-4;
    double lr_critic = 1e-3;
    double lr_temperature = 3e-4;
    double init_temperature = 0.2;
    double target_entropy = 1.0;
    int buffer_size = 500;
    int warmup = 256;
    int batch_size = 32;                      // full scale: 128
    int target_update_period = 1;
    double tau1 = 0.005;
    double tau2 = 0.005;
    std::vector<int> iteration_choices{5, 10, 20, 40, 50};
    int train_interval = 20;                  // slots between local training rounds; full scale: 1

    // GNN
    int gnn_hidden1 = 32;                     // full scale: 128
    int gnn_hidden2 = 16;                      // full scale: 64
    int gnn_critic_hidden = 32;                // full scale: 256
    double lr_gnn = 1e-3;
    double lr_gnn_critic = 1e-3;
    int gnn_buffer_size = 5000;
    int gnn_warmup = 256;
    int gnn_batch_size = 32;                   // full scale: 128
    int gnn_target_update_period = 1;
    double tau_gnn = 0.005;
    int gnn_train_period = 10;
    int gnn_iterations = 5;

    // GDBR surrogate
    double gdbr_kappa = 0.5;

    // model upload accounting
    int bits_per_param = 32;

    int segments_per_lane() const;
    int node_count() const;
    double lane_speed(int lane) const;
    double lane_rate(int lane) const;
    double lane_y(int lane) const;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // Canonical `key = value` text; used for hashing and for checkpoints.
    std::string to_text() const;
    std::uint64_t hash() const;
};

// Applies `key = value` lines on top of `base`. Blank lines and `#` comments
// are skipped; unknown keys and malformed values raise ConfigError.
ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base = {});

// Sets one field by name. Used by the parser and by CLI overrides.
void set_config_value(ScenarioConfig& config, std::string_view key, std::string_view value);

}  // namespace vecaoi
