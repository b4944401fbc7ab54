#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vecaoi/harness.hpp"

using namespace vecaoi;

namespace {

ScenarioConfig quick_config() {
    ScenarioConfig c;
    c.arrival_rate = 1.0;
    c.speed = 30.0;
    c.hidden = 8;
    c.batch_size = 8;
    c.warmup = 16;
    c.buffer_size = 64;
    c.train_interval = 5;
    c.iteration_choices = {1, 2};
    c.gnn_hidden1 = 6;
    c.gnn_hidden2 = 4;
    c.gnn_critic_hidden = 6;
    c.gnn_batch_size = 4;
    c.gnn_warmup = 16;
    c.gnn_train_period = 5;
    c.gnn_iterations = 2;
    c.train_slots = 1500;
    c.test_slots = 500;
    return c;
}

std::string csv(std::span<const MetricsRecord> records) {
    std::ostringstream out;
    write_records_csv(out, records);
    return out.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("scheme names") {
    for (Scheme s : {Scheme::fgnn, Scheme::gfsac, Scheme::lfsac, Scheme::gdbr}) CHECK(parse_scheme(scheme_name(s)) == s);
    CHECK_THROWS_AS(parse_scheme("dqn"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_axis("density"), ConfigError);
}

TEST_CASE("empty road: zero records and no model updates") {
    ScenarioConfig c = quick_config();
    c.arrival_rate = 0.0;
    const auto r = run_training(c, 3, Scheme::fgnn, {});
    CHECK(r.records.size() == static_cast<std::size_t>(c.train_slots));
    for (const auto& rec : r.records) {
        CHECK(rec.avg_aoi == 0.0);
        CHECK(rec.avg_power == 0.0);
        CHECK(rec.delivered_bits == 0.0);
        CHECK(rec.n_vehicles == 0);
        CHECK(rec.mean_reward == 0.0);
    }
    CHECK(r.summary.global_aggregations == 0);
    CHECK(r.summary.gnn_trainings == 0);
    CHECK(r.store.version == 0);
    CHECK(r.store.actor.params.flatten() == initial_store(c, 3).actor.params.flatten());

    const auto t = run_test(c, 3, Scheme::fgnn, initial_store(c, 3));
    CHECK(t.summary.avg_aoi == 0.0);
    CHECK(t.summary.avg_power == 0.0);
}

TEST_CASE("training runs every scheme with sane records") {
    const ScenarioConfig c = quick_config();
    for (Scheme s : {Scheme::fgnn, Scheme::gfsac, Scheme::lfsac, Scheme::gdbr}) {
        CAPTURE(scheme_name(s));
        const auto r = run_training(c, 5, s, {});
        REQUIRE(r.records.size() == static_cast<std::size_t>(c.train_slots));
        long slot = 0;
        for (const auto& rec : r.records) {
            CHECK(rec.slot == slot++);
            CHECK(rec.avg_aoi >= 0.0);
            CHECK(rec.avg_power >= 0.0);
            CHECK(rec.avg_power <= c.p_max);
            CHECK(std::isfinite(rec.mean_reward));
            CHECK(rec.mean_reward <= 0.0);
        }
        CHECK(r.summary.avg_vehicles > 1.0);
        if (s == Scheme::fgnn) {
            CHECK(r.summary.gnn_trainings > 0);
            CHECK(r.summary.local_aggregations > 0);
        }
        if (s == Scheme::fgnn || s == Scheme::lfsac) CHECK(r.summary.global_aggregations > 0);
        if (s == Scheme::gfsac) CHECK(r.store.version > 0);
        if (s == Scheme::gdbr) CHECK(r.store.version == 0);
    }
}

TEST_CASE("same seed reproduces train and test output exactly") {
    const ScenarioConfig c = quick_config();
    for (Scheme s : {Scheme::fgnn, Scheme::gfsac}) {
        const auto a = run_training(c, 8, s, {});
        const auto b = run_training(c, 8, s, {});
        CHECK(csv(a.records) == csv(b.records));
        const auto ta = run_test(c, 8, s, a.store);
        const auto tb = run_test(c, 8, s, b.store);
        CHECK(csv(ta.records) == csv(tb.records));
    }
    const auto other = run_training(c, 9, Scheme::fgnn, {});
    CHECK(csv(other.records) != csv(run_training(c, 8, Scheme::fgnn, {}).records));
}

TEST_CASE("test stage leaves the store alone and acts deterministically") {
    const ScenarioConfig c = quick_config();
    const auto store = initial_store(c, 2);
    const auto t = run_test(c, 2, Scheme::fgnn, store);
    CHECK(t.records.size() == static_cast<std::size_t>(c.test_slots));
    CHECK(t.summary.global_aggregations == 0);
    CHECK(t.summary.local_aggregations == 0);
    CHECK(t.summary.mode == "test");
}

TEST_CASE("CSV and summary output") {
    CHECK(csv({}) == std::string(kRecordsHeader) + "\n");

    ScenarioConfig c = quick_config();
    c.train_slots = 10;
    const auto r = run_training(c, 1, Scheme::fgnn, {});
    const std::string text = csv(r.records);
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);
    CHECK(text.substr(0, kRecordsHeader.size()) == kRecordsHeader);

    const ScenarioConfig longer = quick_config();
    const auto full = run_training(longer, 4, Scheme::lfsac, {});
    const auto rows = parse_csv(csv(full.records));
    double aoi = 0.0, power = 0.0, bits = 0.0, reward = 0.0;
    for (const auto& row : rows) {
        aoi += row[1];
        power += row[2];
        bits += row[3];
        reward += row[5];
    }
    const double n = static_cast<double>(rows.size());
    CHECK(std::abs(aoi / n - full.summary.avg_aoi) <= 1e-9 * std::max(1.0, full.summary.avg_aoi));
    CHECK(std::abs(power / n - full.summary.avg_power) <= 1e-9 * std::max(1.0, full.summary.avg_power));
    CHECK(std::abs(bits / n / longer.slot - full.summary.throughput_bps) <= 1e-9 * full.summary.throughput_bps);
    CHECK(std::abs(reward / n - full.summary.avg_reward) <= 1e-9);

    std::ostringstream json;
    write_summary_json(json, full.summary);
    CHECK(json.str().find("\"avg_aoi\"") != std::string::npos);
    CHECK(json.str().find("\"lfsac\"") != std::string::npos);

    std::ostringstream curve;
    write_curve_csv(curve, full.records, longer.slot);
    CHECK(curve.str().rfind("slot,time_s,avg_aoi,avg_power,throughput_bps\n", 0) == 0);
}

TEST_CASE("emit_results writes three files and reports bad paths") {
    const auto dir = std::filesystem::temp_directory_path() / "vecaoi_emit_test";
    std::filesystem::remove_all(dir);
    const std::vector<MetricsRecord> none;
    emit_results(dir, "x", none, summarize(none, 0.02), 0.02);
    CHECK(std::filesystem::exists(dir / "x_records.csv"));
    CHECK(std::filesystem::exists(dir / "x_summary.json"));
    CHECK(std::filesystem::exists(dir / "x_curve.csv"));

    // a regular file where the directory should be
    const auto blocker = dir / "blocker";
    std::ofstream(blocker) << "x";
    CHECK_THROWS_WITH_AS(emit_results(blocker / "sub", "x", none, summarize(none, 0.02), 0.02),
                         doctest::Contains("blocker"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("audit log and graph dump") {
    ScenarioConfig c = quick_config();
    c.train_slots = 1200;
    std::ostringstream audit, graphs;
    RunOptions opts;
    opts.audit = &audit;
    opts.graph_dump = &graphs;
    run_training(c, 6, Scheme::fgnn, opts);
    CHECK(audit.str().find(" local ") != std::string::npos);
    CHECK(audit.str().find(" global ") != std::string::npos);
    CHECK(graphs.str().rfind("graph 0 20\n", 0) == 0);
}

TEST_CASE("sweep table shape") {
    ScenarioConfig c = quick_config();
    c.train_slots = 100;
    c.test_slots = 50;
    const std::vector<double> one{0.5};
    const std::vector<Scheme> fg{Scheme::fgnn};
    const std::vector<std::uint64_t> s1{1};
    CHECK(sweep(c, SweepAxis::arrival_rate, one, fg, s1).size() == 1);

    const std::vector<double> values{0.25, 0.5};
    const std::vector<Scheme> schemes{Scheme::fgnn, Scheme::gdbr, Scheme::lfsac};
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto rows = sweep(c, SweepAxis::speed, values, schemes, seeds);
    CHECK(rows.size() == 12);
    std::ostringstream out;
    write_sweep_csv(out, rows);
    const std::string text = out.str();
    CHECK(text.rfind(std::string(kSweepHeader) + "\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 13);

    CHECK_THROWS_AS(sweep(c, SweepAxis::arrival_rate, {}, fg, s1), ConfigError);

    const auto faster = with_axis_value(c, SweepAxis::speed, 12.0);
    CHECK(faster.lane_speed(1) == 12.0);
    const auto denser = with_axis_value(c, SweepAxis::arrival_rate, 0.25);
    CHECK(denser.lane_rate(0) == doctest::Approx(0.125));
}

}  // TEST_SUITE
