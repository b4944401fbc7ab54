// Acceptance run: one PASS/FAIL line per criterion.
//
// Criteria 1-4 and 8 are deterministic and set the exit code. Criteria 5-7
// are learning outcomes of long stochastic runs; their lines are reported
// as measured and do not change the exit code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "checks.hpp"
#include "oracles.hpp"
#include "vecaoi/baselines.hpp"
#include "vecaoi/harness.hpp"

using namespace vecaoi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::ofstream report_file;

void report(int n, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    report_file << "criterion " << n << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool rel_close(double got, double want, double tol) {
    return std::abs(got - want) <= tol * std::max(std::abs(want), 1e-300);
}

ParamVector scalar(double v) {
    const std::vector<int> w{1, 1};
    ParamVector p = ParamVector::zeros(w);
    p.layer(0).weight(0, 0) = v;
    return p;
}

SacModel scalar_model(double v) {
    SacModel m;
    for (Mlp* net : {&m.actor, &m.critic1, &m.critic2, &m.target1, &m.target2}) net->params = scalar(v);
    m.log_temperature = v;
    return m;
}

// Every worked example with an independent oracle, at 1e-9 relative (Bessel 1e-8).
std::vector<std::string> equation_oracles() {
    std::vector<std::string> failed;
    auto expect = [&](const char* name, bool ok) {
        if (!ok) failed.push_back(name);
    };
    const ScenarioConfig c;
    const double tol = 1e-9;

    {
        std::vector<VehicleState> vs(1);
        vs[0].speed = 8.333;
        advance_positions(vs, c);
        expect("position step", rel_close(vs[0].x, 8.333 * 0.02, tol) && rel_close(vs[0].x, 0.16666, tol));
    }
    expect("path loss 1 m", rel_close(path_loss_db(1.0), 61.4, tol));
    expect("path loss 100 m", rel_close(path_loss_db(100.0), 101.4, tol));
    expect("shadow correlation", rel_close(shadow_correlation(10.0, 10.0), std::exp(-1.0), tol));
    expect("doppler", rel_close(doppler_hz(8.3333, c), 8.3333 * 28e9 / 3e8, tol));
    {
        const double x = 2.0 * std::numbers::pi * 777.78 * 0.02;
        const double speed = 777.78 * c.lightspeed / c.carrier;
        expect("jakes bessel", rel_close(rayleigh_correlation(speed, c), oracle::bessel_j0(x), 1e-8));
    }
    expect("power gain", rel_close(channel_power_gain(0.0, 130.0, {1.0, 0.0}), 1e-13, tol));
    {
        const double g = 1e-10, p = c.noise / g;
        const auto two = compute_rates(std::vector<double>{p, p}, std::vector<double>{g, g}, {}, {}, c);
        expect("two-vehicle rate", rel_close(two[0], 2e8 * std::log2(1.5), tol));
    }
    {
        TaskQueue q;
        q.push(8e5);
        q.push(8e5);
        const auto r = step_queue_aoi(q, 1e8, 0.02);
        expect("queue head delivery", rel_close(r.delivered_aoi, 8e5 / 1e8, tol) && rel_close(q.head().aoi, 0.02, tol));
    }
    {
        TaskQueue q;
        q.push(1.0);
        q.push(1.0);
        q.tasks()[0].aoi = 1.0;
        q.tasks()[1].aoi = 2.0;
        expect("vehicle mean AoI", rel_close(vehicle_avg_aoi(q), 1.5, tol));
    }
    {
        PenaltyState s{1.0};
        expect("penalty with departure", rel_close(step_xi(s, std::vector<double>{2.0}, 4, c), 1.0 + 2.0 / 4.0, tol));
        s.xi = 1.0;
        expect("penalty decay", rel_close(step_xi(s, {}, 4, c), 0.9999, tol));
    }
    expect("reward with tasks", rel_close(reward({2.0, 1.0, 10.0, 1, 0.0}, c), -(2.0 + 10.0 * 3.0) * 0.1, tol));
    expect("reward without tasks", rel_close(reward({2.0, 0.0, 1.0, 0, 0.0}, c), -(2.0 + 1.0 * 3.0) * 0.1, tol));
    {
        RngStream rng(1);
        const std::vector<int> w{6, 256, 256, 1};
        const Mlp net = make_mlp(w, Activation::relu, rng);
        std::vector<double> x(6);
        Matrix xm(6, 1);
        for (int i = 0; i < 6; ++i) xm(i, 0) = x[i] = rng.uniform(-1.0, 1.0);
        expect("forward pass", rel_close(mlp_forward(net, xm)(0, 0), oracle::mlp_forward(net.params, x, false)[0], 1e-10));
    }
    {
        ScalarAdam s;
        s.lr = 1e-3;
        const double g = 0.37;
        expect("adam first step", rel_close(adam_step(1.0, g, s), 1.0 - 1e-3 * g / (g + 1e-8), tol));
    }
    {
        ParamVector t = scalar(0.0);
        soft_update(t, scalar(1.0), 0.005);
        expect("soft update", rel_close(t.layer(0).weight(0, 0), 0.005, tol));
    }
    {
        // density of the squashed action by differencing its CDF
        const double mean = -0.2, log_std = -0.3, p_max = 20.0;
        bool ok = true;
        for (double eps : {-1.5, -0.5, 0.1, 0.9, 1.6}) {
            const auto s = squash_gaussian(mean, log_std, eps, p_max);
            auto cdf = [&](double a) {
                const double z = (std::atanh(2.0 * a / p_max - 1.0) - mean) / std::exp(log_std);
                return 0.5 * std::erfc(-z / std::numbers::sqrt2);
            };
            const double h = 2e-5;
            ok = ok && std::abs(s.log_prob - std::log((cdf(s.action + h) - cdf(s.action - h)) / (2 * h))) < 1e-3;
        }
        expect("squashed log-density", ok);
    }
    {
        RngStream rng(2);
        SacModel m = SacModel::create(c, rng);
        for (Mlp* t : {&m.target1, &m.target2})
            for (std::size_t l = 0; l < t->params.layer_count(); ++l) {
                t->params.layer(l).weight.setZero();
                t->params.layer(l).bias.setZero();
            }
        m.target1.params.layer(2).bias(0) = 3.0;
        m.target2.params.layer(2).bias(0) = 5.0;
        m.log_temperature = -1e4;
        Vector r(1);
        r << 1.0;
        const std::vector<double> noise{0.3};
        const double y = compute_targets(m, checks::random_states(1, rng), r, 0.5, noise, c.p_max)(0);
        expect("twin-target value", rel_close(y, 1.0 + 0.5 * std::min(3.0, 5.0), tol));

        auto& last = m.actor.params.layer(2);
        last.weight.setZero();
        last.bias.setZero();
        expect("zero-init mean action", rel_close(select_action(m, State{}, rng, false, c), c.p_max / 2, tol));
    }
    {
        RngStream rng(3);
        SacModel m = SacModel::create(c, rng);
        Batch b{checks::random_states(8, rng), Vector::Zero(8), Vector::Zero(8), Matrix::Zero(kStateDim, 8)};
        RngStream a(5), twin(5);
        std::vector<double> noise(8);
        for (auto& e : noise) e = twin.normal();
        const double g = temperature_loss(m, b.states, noise, c.target_entropy, c.p_max).grad;
        const double before = m.log_temperature;
        const double beta = update_temperature(m, b, a, c);
        expect("temperature step", rel_close(beta, std::exp(before - c.lr_temperature * g / (std::abs(g) + 1e-8)), tol));
    }
    {
        ObservationInputs in;
        in.head_size = 3.2e7;
        expect("state size scaling", rel_close(build_state(in, c)[4], 3.2e7 / c.task_size_max, tol));
    }
    {
        RoadGraph g;
        g.features = Matrix::Zero(3, kNodeFeatures);
        g.features(0, 0) = 1.0;
        g.features(1, 0) = 3.0;
        g.features(2, 0) = 7.0;
        g.adjacency = Adjacency::Zero(3, 3);
        g.adjacency(0, 1) = g.adjacency(1, 0) = g.adjacency(1, 2) = g.adjacency(2, 1) = 1;
        g.finalize();
        const std::vector<int> w{kNodeFeatures, 1, 1};
        ParamVector p = ParamVector::zeros(w);
        p.layer(0).weight(0, 0) = 0.5;
        p.layer(0).bias(0) = -0.2;
        p.layer(1).weight(0, 0) = 2.0;
        p.layer(1).bias(0) = 0.1;
        const double m0 = 0.5 * std::log(2.0) - 0.2, m1 = 0.5 * std::log(4.0) - 0.2, m2 = 0.5 * std::log(8.0) - 0.2;
        const double n0 = 2.0 * std::tanh(m0 + m1) + 0.1;
        const double n1 = 2.0 * std::tanh(m1 + 0.5 * (m0 + m2)) + 0.1;
        const double n2 = 2.0 * std::tanh(m2 + m1) + 0.1;
        const Vector e = gnn_forward(p, g);
        expect("path-graph propagation", rel_close(e(0), n0 + n1, 1e-10) && rel_close(e(1), n1 + 0.5 * (n0 + n2), 1e-10) &&
                                             rel_close(e(2), n2 + n1, 1e-10));
    }
    {
        std::vector<VehicleState> vs(2);
        vs[0].x = -80.0;
        vs[1].x = -30.0;
        const RoadGraph g = build_graph(vs, c);
        expect("segment edge", g.adjacency(3, 4) == 1 && g.adjacency(4, 3) == 1);
        Vector emb = Vector::Zero(g.node_count());
        emb(3) = std::log(2.0);
        const auto w = aggregation_weights(emb, 0, vs, g, c);
        expect("softmax weights", w.size() == 2 && rel_close(w[0].weight, 2.0 / 3.0, tol) && rel_close(w[1].weight, 1.0 / 3.0, tol));
    }
    {
        VehicleState v;
        const std::vector<CriticPair> parts{{scalar(4.0), scalar(4.0)}, {scalar(0.0), scalar(0.0)}, {scalar(8.0), scalar(8.0)}};
        local_aggregate(v, parts, std::vector<double>{0.5, 0.25, 0.25});
        expect("weighted local aggregation", rel_close(v.sac.critic1.params.layer(0).weight(0, 0), 4.0, tol));
        local_aggregate(v, parts, lfsac_weights(2));
        expect("uniform local aggregation", rel_close(v.sac.critic1.params.layer(0).weight(0, 0), 4.0, tol));
    }
    expect("upload power", rel_close(model_upload_power(1e-13, c.bandwidth * c.slot, c), 3.98e-14 / 1e-13, tol));
    {
        GlobalModelStore s = GlobalModelStore::from_model(scalar_model(0.0));
        SacModel a = scalar_model(1.0), b = scalar_model(3.0);
        a.critic2.params = scalar(3.0);
        b.critic2.params = scalar(5.0);
        const std::vector<const SacModel*> cohort{&a, &b};
        global_aggregate(s, cohort);
        expect("global mean", rel_close(s.critic1.params.layer(0).weight(0, 0), 2.0, tol) &&
                                  rel_close(s.critic2.params.layer(0).weight(0, 0), 4.0, tol));
    }
    {
        VehicleState v;
        v.sac = scalar_model(4.0);
        GlobalModelStore s = GlobalModelStore::from_model(scalar_model(2.0));
        gfsac_on_train_complete(v, s);
        expect("pairwise store mean", rel_close(s.actor.params.layer(0).weight(0, 0), 3.0, tol));
    }
    {
        const std::vector<GdbrInput> one{{2.0, true}, {0.0, false}};
        const auto a = gdbr_step(one, std::vector<double>{0.0, 0.0}, 2.0, c);
        const std::vector<GdbrInput> half{{1.0, true}, {1.0, true}};
        const auto b = gdbr_step(half, std::vector<double>{1.0, 1.0}, 2.0, c);
        expect("best-response surrogate", a.powers[0] == c.p_max && a.powers[1] == 0.0 && b.powers[0] == 0.0);
    }
    {
        ScenarioConfig q = c;
        q.arrival_rate = 2.0;
        q.speed = 30.0;
        q.hidden = 8;
        q.batch_size = 8;
        q.warmup = 16;
        const auto r = run_test(q, 1, Scheme::gdbr, initial_store(q, 1), RunOptions{1000});
        std::ostringstream csv;
        write_records_csv(csv, r.records);
        std::istringstream in(csv.str());
        std::string line;
        std::getline(in, line);
        double aoi = 0.0, n = 0.0;
        while (std::getline(in, line)) {
            aoi += std::stod(line.substr(line.find(',') + 1));
            n += 1.0;
        }
        expect("summary recomputation", std::abs(aoi / n - r.summary.avg_aoi) <= 1e-9 * std::max(1.0, r.summary.avg_aoi));
    }
    return failed;
}

struct Quarters {
    double first = 0.0;
    double last = 0.0;
};

// Means of the first and last quarter of a trailing moving average.
Quarters quarter_means(const std::vector<MetricsRecord>& records, std::size_t window) {
    std::vector<double> ma(records.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        acc += records[i].avg_aoi;
        if (i >= window) acc -= records[i - window].avg_aoi;
        ma[i] = acc / static_cast<double>(std::min(i + 1, window));
    }
    const std::size_t q = records.size() / 4;
    Quarters out;
    for (std::size_t i = 0; i < q; ++i) out.first += ma[i];
    for (std::size_t i = records.size() - q; i < records.size(); ++i) out.last += ma[i];
    out.first /= static_cast<double>(q);
    out.last /= static_cast<double>(q);
    return out;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string work_dir = "acceptance_out";
    int seed_count = 5;
    long train_slots = 0, sweep_train_slots = 20000;
    bool skip_learning = false;
    app.add_option("--work-dir", work_dir, "scratch directory for determinism outputs");
    app.add_option("--seeds", seed_count, "seeds for criteria 5-7");
    app.add_option("--train-slots", train_slots, "training slots for criteria 5-6 (default: config)");
    app.add_option("--sweep-train-slots", sweep_train_slots, "training slots per sweep point in criterion 7");
    app.add_flag("--skip-learning", skip_learning, "skip criteria 5-7");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(work_dir);
    report_file.open(std::filesystem::path(work_dir) / "report.txt");

    const ScenarioConfig desk;  // 2 lanes, 1/8 veh/s, 30 km/h, 50 m segments
    bool gate = true;

    {
        const auto t = Clock::now();
        const auto failed = equation_oracles();
        const double s = seconds_since(t);
        std::string detail = fmt("all equation oracles hold (%.2f s)", s);
        if (!failed.empty()) {
            detail = "failed:";
            for (const auto& f : failed) detail += " [" + f + "]";
        }
        const bool pass = failed.empty() && s < 10.0;
        report(1, pass, detail);
        gate = gate && pass;
    }
    {
        const auto t = Clock::now();
        checks::GradientErrors worst;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto e = checks::gradient_errors(seed, desk);
            worst.actor = std::max(worst.actor, e.actor);
            worst.critic = std::max(worst.critic, e.critic);
            worst.temperature = std::max(worst.temperature, e.temperature);
            worst.gnn = std::max(worst.gnn, e.gnn);
            worst.gnn_critic = std::max(worst.gnn_critic, e.gnn_critic);
        }
        const double s = seconds_since(t);
        const bool pass = worst.worst() < 1e-4 && s < 120.0;
        report(2, pass,
               fmt("max rel error over 10 seeds: actor %.2e critic %.2e temperature %.2e gnn %.2e gnn-critic %.2e (%.1f s)",
                   worst.actor, worst.critic, worst.temperature, worst.gnn, worst.gnn_critic, s));
        gate = gate && pass;
    }
    {
        const auto t = Clock::now();
        const auto st = checks::channel_stats(1000000, 8.333, 2024, desk);
        const double s = seconds_since(t);
        const bool power_ok = st.mean_power >= 0.98 && st.mean_power <= 1.02;
        const bool jakes_ok = std::abs(st.rayleigh_lag1 - st.rayleigh_expected) <= 0.05 * std::abs(st.rayleigh_expected);
        const bool shadow_ok = std::abs(st.shadow_lag1 - st.shadow_expected) <= 0.05 * st.shadow_expected;
        const bool pass = power_ok && jakes_ok && shadow_ok && s < 60.0;
        report(3, pass,
               fmt("mean |h|^2 %.4f; fading lag-1 %.5f vs J0 %.5f; shadowing lag-1 %.5f vs %.5f (%.1f s)", st.mean_power,
                   st.rayleigh_lag1, st.rayleigh_expected, st.shadow_lag1, st.shadow_expected, s));
        gate = gate && pass;
    }
    {
        const auto t = Clock::now();
        const auto v = checks::aggregation_algebra(10000, 77, desk);
        const double s = seconds_since(t);
        const bool pass = v.total() == 0 && v.events == 10000 && s < 60.0;
        report(4, pass,
               fmt("%ld events; violations: simplex %ld, convexity %ld, idempotence %ld, actor changed %ld (%.1f s)",
                   v.events, v.simplex, v.convexity, v.idempotence, v.actor_touched, s));
        gate = gate && pass;
    }

    if (skip_learning) {
        std::printf("criterion 5: SKIP\ncriterion 6: SKIP\ncriterion 7: SKIP\n");
        report_file << "criterion 5: SKIP\ncriterion 6: SKIP\ncriterion 7: SKIP\n";
    } else {
        ScenarioConfig cfg = desk;
        if (train_slots > 0) cfg.train_slots = train_slots;
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < seed_count; ++i) seeds.push_back(static_cast<std::uint64_t>(i + 1));

        int declined = 0, ordered = 0;
        std::string c5, c6;
        double c5_seconds = 0.0;
        for (std::uint64_t seed : seeds) {
            const auto t = Clock::now();
            const auto fg = run_training(cfg, seed, Scheme::fgnn);
            c5_seconds = std::max(c5_seconds, seconds_since(t));
            const auto q = quarter_means(fg.records, 1000);
            const double ratio = q.last / q.first;
            if (ratio <= 0.70) ++declined;
            c5 += fmt(" s%llu %.3f", static_cast<unsigned long long>(seed), ratio);

            const double fg_test = run_test(cfg, seed, Scheme::fgnn, fg.store).summary.avg_aoi;
            const double untrained = run_test(cfg, seed, Scheme::fgnn, initial_store(cfg, seed)).summary.avg_aoi;
            const auto gf = run_training(cfg, seed, Scheme::gfsac);
            const double gf_test = run_test(cfg, seed, Scheme::gfsac, gf.store).summary.avg_aoi;
            const double gd_test = run_test(cfg, seed, Scheme::gdbr, initial_store(cfg, seed)).summary.avg_aoi;
            if (fg_test <= gf_test && fg_test <= gd_test) ++ordered;
            c6 += fmt(" s%llu fgnn %.3f gfsac %.3f gdbr %.3f (untrained fgnn %.3f)",
                      static_cast<unsigned long long>(seed), fg_test, gf_test, gd_test, untrained);
            std::printf("  seed %llu done: AoI ratio %.3f, test AoI fgnn %.3f gfsac %.3f gdbr %.3f untrained %.3f\n",
                        static_cast<unsigned long long>(seed), ratio, fg_test, gf_test, gd_test, untrained);
            std::fflush(stdout);
        }
        const int need = (seed_count + 1) / 2;
        report(5, declined >= need,
               fmt("last/first quarter AoI <= 0.70 on %d of %d seeds;", declined, seed_count) + c5 +
                   fmt(" (slowest seed %.0f s)", c5_seconds));
        report(6, ordered >= need, fmt("FGNN test AoI lowest on %d of %d seeds;", ordered, seed_count) + c6);

        ScenarioConfig sweep_cfg = desk;
        sweep_cfg.train_slots = sweep_train_slots;
        const std::vector<double> lambdas{1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0};
        const std::vector<Scheme> fgnn{Scheme::fgnn};
        const auto rows = sweep(sweep_cfg, SweepAxis::arrival_rate, lambdas, fgnn, seeds);
        int monotone = 0;
        std::string c7;
        for (std::uint64_t seed : seeds) {
            std::vector<double> aoi;
            for (const auto& r : rows)
                if (r.seed == seed) aoi.push_back(r.avg_aoi);
            const bool up = aoi.size() == 3 && aoi[0] <= aoi[1] && aoi[1] <= aoi[2];
            if (up) ++monotone;
            c7 += fmt(" s%llu %.3f/%.3f/%.3f", static_cast<unsigned long long>(seed), aoi[0], aoi[1], aoi[2]);
        }
        report(7, monotone >= need, fmt("AoI non-decreasing over lambda 1/16, 1/8, 1/4 on %d of %d seeds;", monotone, seed_count) + c7);
    }

    {
        const std::filesystem::path dir(work_dir);
        ScenarioConfig cfg = desk;
        bool same = true;
        for (Scheme s : {Scheme::fgnn, Scheme::gfsac, Scheme::lfsac, Scheme::gdbr}) {
            std::string out[2][2];
            for (int k = 0; k < 2; ++k) {
                const auto sub = dir / ("run" + std::to_string(k));
                const auto tr = run_training(cfg, 11, s, RunOptions{4000});
                emit_results(sub, scheme_name(s) + "_train", tr.records, tr.summary, cfg.slot);
                const auto te = run_test(cfg, 11, s, tr.store, RunOptions{2000});
                emit_results(sub, scheme_name(s) + "_test", te.records, te.summary, cfg.slot);
                out[k][0] = read_file(sub / (scheme_name(s) + "_train_records.csv")) +
                            read_file(sub / (scheme_name(s) + "_train_curve.csv"));
                out[k][1] = read_file(sub / (scheme_name(s) + "_test_records.csv")) +
                            read_file(sub / (scheme_name(s) + "_test_curve.csv"));
            }
            same = same && out[0][0] == out[1][0] && out[0][1] == out[1][1] && out[0][0].size() > 1000;
        }
        report(8, same, same ? "train and test CSVs byte-identical across repeated runs for all schemes"
                             : "CSV output differs between repeated runs");
        gate = gate && same;
    }
    return gate ? 0 : 1;
}
