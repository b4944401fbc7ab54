#include "vecaoi/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "vecaoi/baselines.hpp"

namespace vecaoi {

Scheme parse_scheme(std::string_view name) {
    if (name == "fgnn") return Scheme::fgnn;
    if (name == "gfsac") return Scheme::gfsac;
    if (name == "lfsac") return Scheme::lfsac;
    if (name == "gdbr") return Scheme::gdbr;
    throw ConfigError("unknown scheme '" + std::string(name) + "' (expected fgnn, gfsac, lfsac or gdbr)");
}

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::fgnn: return "fgnn";
        case Scheme::gfsac: return "gfsac";
        case Scheme::lfsac: return "lfsac";
        case Scheme::gdbr: return "gdbr";
    }
    return "?";
}

RunSummary summarize(std::span<const MetricsRecord> records, double slot) {
    RunSummary s;
    s.slots = static_cast<long>(records.size());
    if (records.empty()) return s;
    for (const auto& r : records) {
        s.avg_aoi += r.avg_aoi;
        s.avg_power += r.avg_power;
        s.avg_delivered_bits += r.delivered_bits;
        s.avg_vehicles += static_cast<double>(r.n_vehicles);
        s.avg_reward += r.mean_reward;
    }
    const double n = static_cast<double>(records.size());
    s.avg_aoi /= n;
    s.avg_power /= n;
    s.avg_delivered_bits /= n;
    s.avg_vehicles /= n;
    s.avg_reward /= n;
    s.throughput_bps = s.avg_delivered_bits / slot;
    return s;
}

namespace {

struct Streams {
    RngStream env;
    RngStream policy;
    RngStream train;
    RngStream init;

    explicit Streams(std::uint64_t seed) : Streams(RngStream(seed)) {}

private:
    explicit Streams(RngStream root) : env(root.split()), policy(root.split()), train(root.split()), init(root.split()) {}
};

bool learns(Scheme s) { return s != Scheme::gdbr; }

class Simulation {
public:
    Simulation(const ScenarioConfig& config, std::uint64_t seed, Scheme scheme, bool training,
               GlobalModelStore store, const RunOptions& options)
        : config_(config), scheme_(scheme), training_(training), options_(options), streams_(seed),
          store_(std::move(store)) {
        config_.validate();
        // consume the init stream the same way initial_store does
        GlobalModelStore::create(config_, streams_.init);
        gnn_ = GnnModel::create(config_, streams_.init);
        gnn_replay_ = GnnReplay(static_cast<std::size_t>(config_.gnn_buffer_size));
        arrivals_ = ArrivalProcess::start(config_, streams_.env);
        rsu_ = {config_.rsu_x, config_.rsu_y};
    }

    void run(long slots) {
        records_.reserve(static_cast<std::size_t>(slots));
        for (long t = 0; t < slots; ++t) step(t);
    }

    std::vector<MetricsRecord>& records() { return records_; }
    GlobalModelStore& store() { return store_; }
    GnnModel& gnn() { return gnn_; }
    long global_aggregations = 0;
    long local_aggregations = 0;
    long gnn_trainings = 0;

private:
    bool learning() const { return training_ && learns(scheme_); }
    bool fgnn_training() const { return training_ && scheme_ == Scheme::fgnn; }

    void audit(long slot, const char* type, std::vector<long> ids, std::vector<double> weights) {
        if (!options_.audit) return;
        write_audit(*options_.audit, AggregationEvent{slot, type, std::move(ids), std::move(weights)});
    }

    UploadEvent upload_event(const VehicleState& v, long slot) const {
        UploadEvent e;
        e.vehicle_id = v.id;
        e.payload_bits = model_payload_bits(v.sac, config_);
        e.gain = current_gain(v.channel, rsu_);
        e.power = model_upload_power(e.gain, e.payload_bits, config_);
        e.slot = slot;
        return e;
    }

    void step(long t) {
        const double now = static_cast<double>(t) * config_.slot;
        auto& env = streams_.env;

        // mobility, departures and channel evolution
        std::vector<VehicleState> departed = advance_positions(vehicles_, config_);
        for (auto* group : {&vehicles_, &departed})
            for (auto& v : *group) {
                step_shadowing(v.channel, v.position(config_), config_, env);
                step_rayleigh(v.channel, v.speed, config_, env);
            }

        std::vector<UploadEvent> uploads;
        if (training_ && (scheme_ == Scheme::fgnn || scheme_ == Scheme::lfsac))
            for (const auto& d : departed) uploads.push_back(upload_event(d, t));
        if (training_ && scheme_ == Scheme::gfsac) uploads.swap(next_uploads_);
        next_uploads_.clear();

        std::vector<double> departed_avgs;
        for (const auto& d : departed) departed_avgs.push_back(vehicle_avg_aoi(d.queue));

        for (auto& v : advance_arrivals(arrivals_, config_, env, now, next_id_)) {
            on_enter(v, store_, config_);
            vehicles_.push_back(std::move(v));
        }
        for (auto& v : vehicles_) {
            if (v.x < -config_.rsu_radius || v.x > config_.rsu_radius)
                throw std::logic_error("vehicle outside the coverage area is still active");
            generate_task(v, env, now, config_);
        }

        const std::size_t n = vehicles_.size();
        RoadGraph graph;
        Vector embeddings;
        if (fgnn_training()) {
            graph = build_graph(vehicles_, config_);
            embeddings = gnn_forward(gnn_.gnn, graph);
            if (options_.graph_dump) write_graph(*options_.graph_dump, graph, t);
        }

        // observation
        std::vector<double> gains(n), averages(n);
        for (std::size_t i = 0; i < n; ++i) {
            gains[i] = current_gain(vehicles_[i].channel, rsu_);
            averages[i] = vehicle_avg_aoi(vehicles_[i].queue);
        }
        const double aoi_before = system_avg_aoi(averages);
        std::vector<State> states(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& v = vehicles_[i];
            ObservationInputs in;
            in.gain = gains[i];
            in.head_aoi = v.queue.empty() ? 0.0 : v.queue.head().aoi;
            in.system_aoi = aoi_before;
            in.distance = distance(v.position(config_), rsu_);
            in.head_size = v.queue.empty() ? 0.0 : v.queue.head().size;
            in.vehicle_count = n;
            states[i] = build_state(in, config_);
            if (learning() && v.pending) {
                v.pending->next_state = states[i];
                v.replay.push(*v.pending);
                v.pending.reset();
            }
        }

        // actions
        std::vector<double> powers(n, 0.0);
        if (scheme_ == Scheme::gdbr) {
            std::vector<GdbrInput> in(n);
            std::vector<double> prev(n);
            for (std::size_t i = 0; i < n; ++i) {
                in[i].has_task = !vehicles_[i].queue.empty();
                in[i].head_aoi = in[i].has_task ? vehicles_[i].queue.head().aoi : 0.0;
                prev[i] = vehicles_[i].offload_probability;
            }
            const GdbrOutput out = gdbr_step(in, prev, aoi_before, config_);
            for (std::size_t i = 0; i < n; ++i) {
                vehicles_[i].offload_probability = out.probabilities[i];
                powers[i] = out.powers[i];
            }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                powers[i] = select_action(vehicles_[i].sac, states[i], streams_.policy, training_, config_);
        }

        // transmission
        std::vector<double> upload_powers, upload_gains;
        for (const auto& u : uploads) {
            upload_powers.push_back(u.power);
            upload_gains.push_back(u.gain);
        }
        const std::vector<double> rates = compute_rates(powers, gains, upload_powers, upload_gains, config_);
        double delivered = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            delivered += step_queue_aoi(vehicles_[i].queue, rates[i], config_.slot).delivered_bits;
            averages[i] = vehicle_avg_aoi(vehicles_[i].queue);
            vehicles_[i].last_power = powers[i];
        }
        const double aoi = system_avg_aoi(averages);
        const double xi = step_xi(xi_, departed_avgs, n + departed.size(), config_);

        double reward_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto& v = vehicles_[i];
            RewardInputs in;
            in.system_aoi = aoi;
            in.head_aoi = v.queue.empty() ? 0.0 : v.queue.head().aoi;
            in.power = powers[i];
            in.task_count = v.queue.size();
            in.xi = xi;
            const double r = reward(in, config_);
            reward_sum += r;
            if (learning()) v.pending = Transition{states[i], powers[i], r, {}};
        }

        if (learning() && t % config_.train_interval == 0) train_and_aggregate(t, graph, embeddings);

        // an empty road has nothing to learn from; the open tuple is dropped
        if (fgnn_training() && vehicles_.empty()) pending_gnn_.reset();
        if (fgnn_training() && !vehicles_.empty()) {
            if (pending_gnn_) {
                pending_gnn_->next_graph = graph;
                gnn_replay_.push(std::move(*pending_gnn_));
            }
            pending_gnn_ = GnnTransition{graph, embeddings, aoi, {}};
            if ((t + 1) % config_.gnn_train_period == 0 && train_gnn(gnn_, gnn_replay_, streams_.train, config_))
                ++gnn_trainings;
        }

        if (training_ && (scheme_ == Scheme::fgnn || scheme_ == Scheme::lfsac) && !departed.empty()) {
            std::vector<const SacModel*> models;
            std::vector<long> ids;
            for (const auto& d : departed) {
                models.push_back(&d.sac);
                ids.push_back(d.id);
            }
            global_aggregate(store_, models);
            ++global_aggregations;
            audit(t, "global", ids, std::vector<double>(ids.size(), 1.0 / static_cast<double>(ids.size())));
        }

        MetricsRecord rec;
        rec.slot = t;
        rec.avg_aoi = aoi;
        rec.delivered_bits = delivered;
        rec.n_vehicles = static_cast<long>(n);
        if (n > 0) {
            double p = 0.0;
            for (double x : powers) p += x;
            rec.avg_power = p / static_cast<double>(n);
            rec.mean_reward = reward_sum / static_cast<double>(n);
        }
        records_.push_back(rec);
    }

    void train_and_aggregate(long t, const RoadGraph& graph, const Vector& embeddings) {
        std::vector<std::size_t> trained;
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            auto& v = vehicles_[i];
            const auto losses = local_train(v.sac, v.replay, v.iterations, streams_.train, config_);
            if (!losses) continue;
            v.last_losses = {losses->actor, losses->critic, losses->target_critic};
            trained.push_back(i);
        }
        if (trained.empty()) return;

        if (scheme_ == Scheme::gfsac) {
            for (std::size_t i : trained) {
                gfsac_on_train_complete(vehicles_[i], store_);
                next_uploads_.push_back(upload_event(vehicles_[i], t + 1));
                ++global_aggregations;
                audit(t, "global", {vehicles_[i].id}, {0.5});
            }
            return;
        }

        // every aggregation in this slot reads the critics as they were after training
        std::vector<CriticPair> snapshot;
        snapshot.reserve(vehicles_.size());
        for (const auto& v : vehicles_) snapshot.push_back({v.sac.critic1.params, v.sac.critic2.params});

        for (std::size_t i : trained) {
            std::vector<std::size_t> members;
            std::vector<double> weights;
            if (scheme_ == Scheme::fgnn) {
                for (const auto& w : aggregation_weights(embeddings, i, vehicles_, graph, config_)) {
                    members.push_back(w.vehicle);
                    weights.push_back(w.weight);
                }
            } else {
                members.push_back(i);
                for (std::size_t j : vehicles_in_range(vehicles_, i, config_)) members.push_back(j);
                weights = lfsac_weights(members.size() - 1);
            }
            if (members.size() < 2) continue;  // nobody in range
            std::vector<CriticPair> participants;
            std::vector<long> ids;
            for (std::size_t j : members) {
                participants.push_back(snapshot[j]);
                ids.push_back(vehicles_[j].id);
            }
            local_aggregate(vehicles_[i], participants, weights);
            ++local_aggregations;
            audit(t, "local", std::move(ids), std::move(weights));
        }
    }

    ScenarioConfig config_;
    Scheme scheme_;
    bool training_;
    RunOptions options_;
    Streams streams_;
    GlobalModelStore store_;
    GnnModel gnn_;
    GnnReplay gnn_replay_;
    std::optional<GnnTransition> pending_gnn_;
    ArrivalProcess arrivals_;
    std::vector<VehicleState> vehicles_;
    std::vector<UploadEvent> next_uploads_;
    PenaltyState xi_;
    Point rsu_;
    long next_id_ = 0;
    std::vector<MetricsRecord> records_;
};

RunSummary finish_summary(std::span<const MetricsRecord> records, const ScenarioConfig& config, std::uint64_t seed,
                          Scheme scheme, const char* mode, double seconds) {
    RunSummary s = summarize(records, config.slot);
    s.config_hash = config.hash();
    s.seed = seed;
    s.scheme = scheme;
    s.mode = mode;
    s.wall_seconds = seconds;
    return s;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

GlobalModelStore initial_store(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    Streams streams(seed);
    return GlobalModelStore::create(config, streams.init);
}

TrainingResult run_training(const ScenarioConfig& config, std::uint64_t seed, Scheme scheme,
                            const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    Simulation sim(config, seed, scheme, true, initial_store(config, seed), options);
    sim.run(options.slots.value_or(config.train_slots));
    TrainingResult out;
    out.records = std::move(sim.records());
    out.store = std::move(sim.store());
    out.gnn = std::move(sim.gnn());
    out.summary = finish_summary(out.records, config, seed, scheme, "train", elapsed(start));
    out.summary.global_aggregations = sim.global_aggregations;
    out.summary.local_aggregations = sim.local_aggregations;
    out.summary.gnn_trainings = sim.gnn_trainings;
    return out;
}

TestResult run_test(const ScenarioConfig& config, std::uint64_t seed, Scheme scheme, const GlobalModelStore& store,
                    const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    Simulation sim(config, seed, scheme, false, store, options);
    sim.run(options.slots.value_or(config.test_slots));
    TestResult out;
    out.records = std::move(sim.records());
    out.summary = finish_summary(out.records, config, seed, scheme, "test", elapsed(start));
    return out;
}

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records)
        out << r.slot << ',' << fmt(r.avg_aoi) << ',' << fmt(r.avg_power) << ',' << fmt(r.delivered_bits) << ','
            << r.n_vehicles << ',' << fmt(r.mean_reward) << '\n';
}

void write_summary_json(std::ostream& out, const RunSummary& s) {
    nlohmann::ordered_json j;
    j["config_hash"] = s.config_hash;
    j["seed"] = s.seed;
    j["scheme"] = scheme_name(s.scheme);
    j["mode"] = s.mode;
    j["slots"] = s.slots;
    j["avg_aoi"] = s.avg_aoi;
    j["avg_power"] = s.avg_power;
    j["avg_delivered_bits"] = s.avg_delivered_bits;
    j["throughput_bps"] = s.throughput_bps;
    j["avg_vehicles"] = s.avg_vehicles;
    j["avg_reward"] = s.avg_reward;
    j["global_aggregations"] = s.global_aggregations;
    j["local_aggregations"] = s.local_aggregations;
    j["gnn_trainings"] = s.gnn_trainings;
    j["wall_seconds"] = s.wall_seconds;
    out << j.dump(2) << '\n';
}

void write_curve_csv(std::ostream& out, std::span<const MetricsRecord> records, double slot) {
    out << "slot,time_s,avg_aoi,avg_power,throughput_bps\n";
    for (const auto& r : records)
        out << r.slot << ',' << fmt(static_cast<double>(r.slot) * slot) << ',' << fmt(r.avg_aoi) << ','
            << fmt(r.avg_power) << ',' << fmt(r.delivered_bits / slot) << '\n';
}

void emit_results(const std::filesystem::path& dir, const std::string& prefix,
                  std::span<const MetricsRecord> records, const RunSummary& summary, double slot) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    {
        auto out = open_output(dir / (prefix + "_records.csv"));
        write_records_csv(out, records);
    }
    {
        auto out = open_output(dir / (prefix + "_summary.json"));
        write_summary_json(out, summary);
    }
    {
        auto out = open_output(dir / (prefix + "_curve.csv"));
        write_curve_csv(out, records, slot);
    }
}

SweepAxis parse_sweep_axis(std::string_view name) {
    if (name == "lambda") return SweepAxis::arrival_rate;
    if (name == "speed") return SweepAxis::speed;
    throw ConfigError("unknown sweep axis '" + std::string(name) + "' (expected lambda or speed)");
}

ScenarioConfig with_axis_value(ScenarioConfig config, SweepAxis axis, double value) {
    if (axis == SweepAxis::arrival_rate) {
        config.arrival_rate = value;
        config.lane_arrival_rates.clear();
    } else {
        config.speed = value;
        config.lane_speeds.clear();
    }
    config.validate();
    return config;
}

std::vector<SweepRow> sweep(const ScenarioConfig& config, SweepAxis axis, std::span<const double> values,
                            std::span<const Scheme> schemes, std::span<const std::uint64_t> seeds) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<SweepRow> rows;
    for (double value : values) {
        const ScenarioConfig c = with_axis_value(config, axis, value);
        for (Scheme scheme : schemes)
            for (std::uint64_t seed : seeds) {
                const TrainingResult trained = run_training(c, seed, scheme);
                const TestResult tested = run_test(c, seed, scheme, trained.store);
                rows.push_back({value, scheme, seed, tested.summary.avg_aoi, tested.summary.avg_power,
                                tested.summary.throughput_bps});
            }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << kSweepHeader << '\n';
    for (const auto& r : rows)
        out << fmt(r.axis_value) << ',' << scheme_name(r.scheme) << ',' << r.seed << ',' << fmt(r.avg_aoi) << ','
            << fmt(r.avg_power) << ',' << fmt(r.throughput) << '\n';
}

}  // namespace vecaoi
