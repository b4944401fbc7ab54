#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "vecaoi/channel.hpp"
#include "vecaoi/harness.hpp"

namespace py = pybind11;
using namespace vecaoi;

namespace {

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["config_hash"] = s.config_hash;
    d["seed"] = s.seed;
    d["scheme"] = scheme_name(s.scheme);
    d["mode"] = s.mode;
    d["slots"] = s.slots;
    d["avg_aoi"] = s.avg_aoi;
    d["avg_power"] = s.avg_power;
    d["avg_delivered_bits"] = s.avg_delivered_bits;
    d["throughput_bps"] = s.throughput_bps;
    d["avg_vehicles"] = s.avg_vehicles;
    d["avg_reward"] = s.avg_reward;
    d["global_aggregations"] = s.global_aggregations;
    d["local_aggregations"] = s.local_aggregations;
    d["gnn_trainings"] = s.gnn_trainings;
    d["wall_seconds"] = s.wall_seconds;
    return d;
}

// Column arrays, one entry per slot.
py::dict records_dict(const std::vector<MetricsRecord>& records) {
    const auto n = static_cast<py::ssize_t>(records.size());
    py::array_t<long> slot(n), vehicles(n);
    py::array_t<double> aoi(n), power(n), bits(n), reward(n);
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        slot.mutable_at(i) = r.slot;
        aoi.mutable_at(i) = r.avg_aoi;
        power.mutable_at(i) = r.avg_power;
        bits.mutable_at(i) = r.delivered_bits;
        vehicles.mutable_at(i) = r.n_vehicles;
        reward.mutable_at(i) = r.mean_reward;
    }
    py::dict d;
    d["slot"] = slot;
    d["avg_aoi"] = aoi;
    d["avg_power"] = power;
    d["delivered_bits"] = bits;
    d["n_vehicles"] = vehicles;
    d["mean_reward"] = reward;
    return d;
}

py::array_t<double> flat(const ParamVector& p) {
    const auto v = p.flatten();
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

RunOptions options(std::optional<long> slots) {
    RunOptions o;
    o.slots = slots;
    return o;
}

}  // namespace

PYBIND11_MODULE(_vecaoi, m) {
    m.doc() = "Vehicular-edge AoI simulator core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ScenarioConfig>(m, "Config")
        .def(py::init<>())
        .def_static("parse", [](const std::string& text) { return parse_config(text); }, py::arg("text"))
        .def_static("load", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"))
        .def("set", [](ScenarioConfig& c, const std::string& key, const std::string& value) {
            set_config_value(c, key, value);
            return &c;
        }, py::arg("key"), py::arg("value"), py::return_value_policy::reference_internal)
        .def("validate", &ScenarioConfig::validate)
        .def("to_text", &ScenarioConfig::to_text)
        .def("hash", &ScenarioConfig::hash)
        .def("node_count", &ScenarioConfig::node_count)
        .def_readwrite("lanes", &ScenarioConfig::lanes)
        .def_readwrite("speed", &ScenarioConfig::speed)
        .def_readwrite("arrival_rate", &ScenarioConfig::arrival_rate)
        .def_readwrite("slot", &ScenarioConfig::slot)
        .def_readwrite("p_max", &ScenarioConfig::p_max)
        .def_readwrite("segment_len", &ScenarioConfig::segment_len)
        .def_readwrite("train_slots", &ScenarioConfig::train_slots)
        .def_readwrite("test_slots", &ScenarioConfig::test_slots)
        .def_readwrite("hidden", &ScenarioConfig::hidden)
        .def_readwrite("batch_size", &ScenarioConfig::batch_size)
        .def_readwrite("train_interval", &ScenarioConfig::train_interval)
        .def("__copy__", [](const ScenarioConfig& c) { return c; })
        .def("__repr__", [](const ScenarioConfig& c) { return "<vecaoi.Config hash=" + std::to_string(c.hash()) + ">"; });

    py::class_<GlobalModelStore>(m, "Store")
        .def_readonly("version", &GlobalModelStore::version)
        .def_readonly("log_temperature", &GlobalModelStore::log_temperature)
        .def("actor_params", [](const GlobalModelStore& s) { return flat(s.actor.params); })
        .def("critic_params", [](const GlobalModelStore& s) { return py::make_tuple(flat(s.critic1.params), flat(s.critic2.params)); })
        .def("save_actor", [](const GlobalModelStore& s, const std::filesystem::path& p) { save_params(p, s.actor.params); },
             py::arg("path"))
        .def("load_actor", [](GlobalModelStore& s, const std::filesystem::path& p) {
            ParamVector q = load_params(p);
            if (!q.same_shape(s.actor.params)) throw ConfigError("actor checkpoint does not match the configured widths");
            s.actor.params = std::move(q);
        }, py::arg("path"));

    py::class_<TrainingResult>(m, "TrainResult")
        .def_readonly("store", &TrainingResult::store)
        .def_property_readonly("summary", [](const TrainingResult& r) { return summary_dict(r.summary); })
        .def_property_readonly("records", [](const TrainingResult& r) { return records_dict(r.records); })
        .def("write", [](const TrainingResult& r, const std::filesystem::path& dir, const std::string& prefix, double slot) {
            emit_results(dir, prefix, r.records, r.summary, slot);
        }, py::arg("dir"), py::arg("prefix"), py::arg("slot") = 0.02);

    py::class_<TestResult>(m, "TestResult")
        .def_property_readonly("summary", [](const TestResult& r) { return summary_dict(r.summary); })
        .def_property_readonly("records", [](const TestResult& r) { return records_dict(r.records); })
        .def("write", [](const TestResult& r, const std::filesystem::path& dir, const std::string& prefix, double slot) {
            emit_results(dir, prefix, r.records, r.summary, slot);
        }, py::arg("dir"), py::arg("prefix"), py::arg("slot") = 0.02);

    m.def("initial_store", &initial_store, py::arg("config"), py::arg("seed"));

    m.def("train", [](const ScenarioConfig& c, std::uint64_t seed, const std::string& scheme, std::optional<long> slots) {
        c.validate();
        const Scheme s = parse_scheme(scheme);
        py::gil_scoped_release release;
        return run_training(c, seed, s, options(slots));
    }, py::arg("config"), py::arg("seed"), py::arg("scheme") = "fgnn", py::arg("slots") = py::none());

    m.def("test", [](const ScenarioConfig& c, std::uint64_t seed, const std::string& scheme,
                     std::optional<GlobalModelStore> store, std::optional<long> slots) {
        c.validate();
        const Scheme s = parse_scheme(scheme);
        const GlobalModelStore st = store ? *store : initial_store(c, seed);
        py::gil_scoped_release release;
        return run_test(c, seed, s, st, options(slots));
    }, py::arg("config"), py::arg("seed"), py::arg("scheme") = "fgnn", py::arg("store") = py::none(),
       py::arg("slots") = py::none());

    m.def("sweep", [](const ScenarioConfig& c, const std::string& axis, const std::vector<double>& values,
                      const std::vector<std::string>& schemes, const std::vector<std::uint64_t>& seeds) {
        c.validate();
        const SweepAxis a = parse_sweep_axis(axis);
        std::vector<Scheme> ss;
        for (const auto& s : schemes) ss.push_back(parse_scheme(s));
        std::vector<SweepRow> rows;
        {
            py::gil_scoped_release release;
            rows = sweep(c, a, values, ss, seeds);
        }
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["axis_value"] = r.axis_value;
            d["scheme"] = scheme_name(r.scheme);
            d["seed"] = r.seed;
            d["avg_aoi"] = r.avg_aoi;
            d["avg_power"] = r.avg_power;
            d["throughput"] = r.throughput;
            out.append(d);
        }
        return out;
    }, py::arg("config"), py::arg("axis"), py::arg("values"), py::arg("schemes"), py::arg("seeds"));

    m.def("path_loss_db", &path_loss_db, py::arg("distance_m"));
    m.def("rayleigh_correlation", &rayleigh_correlation, py::arg("speed"), py::arg("config"));
    m.def("compute_rates", [](const std::vector<double>& powers, const std::vector<double>& gains,
                              const std::vector<double>& upload_powers, const std::vector<double>& upload_gains,
                              const ScenarioConfig& c) {
        if (powers.size() != gains.size() || upload_powers.size() != upload_gains.size())
            throw ConfigError("power and gain lists must have equal length");
        return compute_rates(powers, gains, upload_powers, upload_gains, c);
    }, py::arg("powers"), py::arg("gains"), py::arg("upload_powers") = std::vector<double>{},
       py::arg("upload_gains") = std::vector<double>{}, py::arg("config") = ScenarioConfig{});
}
