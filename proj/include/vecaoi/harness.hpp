#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/federated.hpp"
#include "vecaoi/road_graph.hpp"

namespace vecaoi {

enum class Scheme { fgnn, gfsac, lfsac, gdbr };

Scheme parse_scheme(std::string_view name);  // throws ConfigError
std::string scheme_name(Scheme scheme);

struct MetricsRecord {
    long slot = 0;
    double avg_aoi = 0.0;         // s
    double avg_power = 0.0;       // W, mean over present vehicles
    double delivered_bits = 0.0;
    long n_vehicles = 0;
    double mean_reward = 0.0;
};

struct RunSummary {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::fgnn;
    std::string mode;
    long slots = 0;
    double avg_aoi = 0.0;
    double avg_power = 0.0;
    double avg_delivered_bits = 0.0;
    double throughput_bps = 0.0;
    double avg_vehicles = 0.0;
    double avg_reward = 0.0;
    long global_aggregations = 0;
    long local_aggregations = 0;
    long gnn_trainings = 0;
    double wall_seconds = 0.0;
};

// Time-averages of the records; counters and wall time are left at zero.
RunSummary summarize(std::span<const MetricsRecord> records, double slot);

struct RunOptions {
    std::optional<long> slots;           // overrides train_slots / test_slots
    std::ostream* audit = nullptr;       // aggregation events
    std::ostream* graph_dump = nullptr;  // road graph per slot (FGNN training)
};

struct TrainingResult {
    GlobalModelStore store;
    GnnModel gnn;
    RunSummary summary;
    std::vector<MetricsRecord> records;
};

struct TestResult {
    RunSummary summary;
    std::vector<MetricsRecord> records;
};

// Training stage. GDBR runs the same loop with no learning.
TrainingResult run_training(const ScenarioConfig& config, std::uint64_t seed, Scheme scheme,
                            const RunOptions& options = {});

// Testing stage: deterministic actor, no training or aggregation.
TestResult run_test(const ScenarioConfig& config, std::uint64_t seed, Scheme scheme, const GlobalModelStore& store,
                    const RunOptions& options = {});

// Initial store for a seed, as used by run_training before any learning.
GlobalModelStore initial_store(const ScenarioConfig& config, std::uint64_t seed);

inline constexpr std::string_view kRecordsHeader = "slot,avg_aoi,avg_power,delivered_bits,n_vehicles,mean_reward";
inline constexpr std::string_view kSweepHeader = "axis_value,scheme,seed,avg_aoi,avg_power,throughput";

void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records);
void write_summary_json(std::ostream& out, const RunSummary& summary);
// slot,time_s,avg_aoi,avg_power,throughput_bps
void write_curve_csv(std::ostream& out, std::span<const MetricsRecord> records, double slot);

// Writes <prefix>_records.csv, <prefix>_summary.json and <prefix>_curve.csv
// into `dir`, creating it when needed. Throws IoError naming the path.
void emit_results(const std::filesystem::path& dir, const std::string& prefix,
                  std::span<const MetricsRecord> records, const RunSummary& summary, double slot);

enum class SweepAxis { arrival_rate, speed };

SweepAxis parse_sweep_axis(std::string_view name);  // "lambda" or "speed"

struct SweepRow {
    double axis_value = 0.0;
    Scheme scheme = Scheme::fgnn;
    std::uint64_t seed = 0;
    double avg_aoi = 0.0;
    double avg_power = 0.0;
    double throughput = 0.0;  // bit/s
};

// Applies one sweep value to every lane.
ScenarioConfig with_axis_value(ScenarioConfig config, SweepAxis axis, double value);

// Train then test for every (value, scheme, seed). Throws ConfigError on an
// empty value list.
std::vector<SweepRow> sweep(const ScenarioConfig& config, SweepAxis axis, std::span<const double> values,
                            std::span<const Scheme> schemes, std::span<const std::uint64_t> seeds);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace vecaoi
