// Command-line driver: train, test or sweep one scheme and write CSV/JSON results.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vecaoi/harness.hpp"
#include "vecaoi/nn.hpp"

namespace {

using namespace vecaoi;

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::string item;
    for (std::size_t i = 0; i <= list.size(); ++i) {
        if (i == list.size() || list[i] == ',') {
            if (!item.empty()) {
                // accept fractions such as 1/8
                ScenarioConfig tmp;
                set_config_value(tmp, "arrival_rate", item);
                out.push_back(tmp.arrival_rate);
            }
            item.clear();
        } else if (list[i] != ' ') {
            item += list[i];
        }
    }
    return out;
}

void save_store(const std::filesystem::path& dir, const std::string& prefix, const GlobalModelStore& store) {
    save_params(dir / (prefix + "_actor.params"), store.actor.params);
    save_params(dir / (prefix + "_critic1.params"), store.critic1.params);
    save_params(dir / (prefix + "_critic2.params"), store.critic2.params);
    save_params(dir / (prefix + "_target1.params"), store.target1.params);
    save_params(dir / (prefix + "_target2.params"), store.target2.params);
}

GlobalModelStore load_store(const std::filesystem::path& dir, const std::string& prefix,
                            const ScenarioConfig& config, std::uint64_t seed) {
    GlobalModelStore store = initial_store(config, seed);
    store.actor.params = load_params(dir / (prefix + "_actor.params"));
    if (!store.actor.params.same_shape(initial_store(config, seed).actor.params))
        throw ConfigError("actor checkpoint does not match the configured widths");
    return store;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicular edge AoI simulator"};
    std::string config_path, scheme_text = "fgnn", mode = "train", out_dir = "results", axis_text = "lambda";
    std::string sweep_values, seeds_text, checkpoint;
    std::uint64_t seed = 1;
    std::optional<long> slots, test_slots;
    std::optional<double> lg, lambda, speed;
    bool audit = false, graphs = false;

    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--scheme", scheme_text, "fgnn, gfsac, lfsac or gdbr");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--slots", slots, "slots to run (train or test)");
    app.add_option("--test-slots", test_slots, "test slots in sweep mode");
    app.add_option("--lg", lg, "road segment length (m)");
    app.add_option("--lambda", lambda, "total arrival rate (veh/s)");
    app.add_option("--speed", speed, "vehicle speed (m/s)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--mode", mode, "train, test or sweep")->check(CLI::IsMember({"train", "test", "sweep"}));
    app.add_option("--sweep-axis", axis_text, "lambda or speed");
    app.add_option("--sweep-values", sweep_values, "comma-separated axis values");
    app.add_option("--sweep-seeds", seeds_text, "comma-separated seeds for sweep mode (default: --seed)");
    app.add_option("--checkpoint", checkpoint, "prefix of a trained actor checkpoint for test mode");
    app.add_flag("--audit", audit, "write the aggregation audit log");
    app.add_flag("--graphs", graphs, "write the per-slot road graph dump");
    CLI11_PARSE(app, argc, argv);

    try {
        ScenarioConfig config = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
        if (lg) config.segment_len = *lg;
        if (lambda) {
            config.arrival_rate = *lambda;
            config.lane_arrival_rates.clear();
        }
        if (speed) {
            config.speed = *speed;
            config.lane_speeds.clear();
        }
        config.validate();
        const Scheme scheme = parse_scheme(scheme_text);
        const std::filesystem::path dir(out_dir);
        const std::string prefix = scheme_name(scheme) + "_" + mode + "_seed" + std::to_string(seed);

        if (mode == "sweep") {
            const SweepAxis axis = parse_sweep_axis(axis_text);
            const std::vector<double> values = parse_values(sweep_values);
            std::vector<std::uint64_t> seeds;
            for (double s : parse_values(seeds_text)) seeds.push_back(static_cast<std::uint64_t>(s));
            if (seeds.empty()) seeds.push_back(seed);
            if (slots) config.train_slots = *slots;
            if (test_slots) config.test_slots = *test_slots;
            const std::vector<Scheme> schemes{scheme};
            const auto rows = sweep(config, axis, values, schemes, seeds);
            std::filesystem::create_directories(dir);
            const auto path = dir / (scheme_name(scheme) + "_sweep_" + axis_text + ".csv");
            std::ofstream out(path);
            if (!out) throw IoError("cannot write " + path.string());
            write_sweep_csv(out, rows);
            std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
            return 0;
        }

        std::filesystem::create_directories(dir);
        std::ofstream audit_out, graph_out;
        RunOptions options;
        options.slots = slots;
        if (audit) {
            audit_out.open(dir / (prefix + "_audit.log"));
            options.audit = &audit_out;
        }
        if (graphs) {
            graph_out.open(dir / (prefix + "_graphs.txt"));
            options.graph_dump = &graph_out;
        }

        if (mode == "train") {
            const TrainingResult r = run_training(config, seed, scheme, options);
            emit_results(dir, prefix, r.records, r.summary, config.slot);
            save_store(dir, scheme_name(scheme) + "_seed" + std::to_string(seed), r.store);
            std::printf("train %s seed %llu: avg AoI %.4f s, avg power %.4f W, throughput %.4g bit/s, %.1f s\n",
                        scheme_name(scheme).c_str(), static_cast<unsigned long long>(seed), r.summary.avg_aoi,
                        r.summary.avg_power, r.summary.throughput_bps, r.summary.wall_seconds);
        } else {
            const GlobalModelStore store =
                checkpoint.empty() ? initial_store(config, seed) : load_store(dir, checkpoint, config, seed);
            const TestResult r = run_test(config, seed, scheme, store, options);
            emit_results(dir, prefix, r.records, r.summary, config.slot);
            std::printf("test %s seed %llu: avg AoI %.4f s, avg power %.4f W, throughput %.4g bit/s, %.1f s\n",
                        scheme_name(scheme).c_str(), static_cast<unsigned long long>(seed), r.summary.avg_aoi,
                        r.summary.avg_power, r.summary.throughput_bps, r.summary.wall_seconds);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
