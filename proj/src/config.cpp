#include "vecaoi/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace vecaoi {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    // allow simple fractions such as 1/8
    if (ec == std::errc{} && ptr != end && *ptr == '/') {
        double denom = 0.0;
        auto [p2, ec2] = std::from_chars(ptr + 1, end, denom);
        if (ec2 != std::errc{} || p2 != end || denom == 0.0)
            throw ConfigError("invalid number for '" + std::string(key) + "': " + std::string(text));
        return value / denom;
    }
    if (ec != std::errc{} || ptr != end || text.empty())
        throw ConfigError("invalid number for '" + std::string(key) + "': " + std::string(text));
    return value;
}

long parse_long(std::string_view key, std::string_view text) {
    const double v = parse_double(key, text);
    if (v != std::floor(v))
        throw ConfigError("expected an integer for '" + std::string(key) + "': " + std::string(text));
    return static_cast<long>(v);
}

template <class T, class Parse>
std::vector<T> parse_list(std::string_view key, std::string_view text, Parse parse) {
    std::vector<T> out;
    text = trim(text);
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        out.push_back(static_cast<T>(parse(key, text.substr(start, comma - start))));
        start = comma + 1;
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

template <class T>
std::string format_list(const std::vector<T>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>)
            s += format_double(values[i]);
        else
            s += std::to_string(values[i]);
    }
    return s;
}

struct Field {
    std::string_view name;
    std::function<void(ScenarioConfig&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class M>
Field make_field(std::string_view name, M ScenarioConfig::*member) {
    Field f;
    f.name = name;
    f.set = [name, member](ScenarioConfig& c, std::string_view v) {
        using T = std::remove_cvref_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, double>)
            c.*member = parse_double(name, v);
        else if constexpr (std::is_same_v<T, std::vector<double>>)
            c.*member = parse_list<double>(name, v, parse_double);
        else if constexpr (std::is_same_v<T, std::vector<int>>)
            c.*member = parse_list<int>(name, v, parse_long);
        else
            c.*member = static_cast<T>(parse_long(name, v));
    };
    f.get = [member](const ScenarioConfig& c) -> std::string {
        using T = std::remove_cvref_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, double>)
            return format_double(c.*member);
        else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>>)
            return format_list(c.*member);
        else
            return std::to_string(c.*member);
    };
    return f;
}

const std::vector<Field>& fields() {
    using C = ScenarioConfig;
    static const std::vector<Field> table = {
        make_field("lanes", &C::lanes),
        make_field("lane_speeds", &C::lane_speeds),
        make_field("lane_arrival_rates", &C::lane_arrival_rates),
        make_field("speed", &C::speed),
        make_field("arrival_rate", &C::arrival_rate),
        make_field("rsu_radius", &C::rsu_radius),
        make_field("v2v_range", &C::v2v_range),
        make_field("lane_spacing", &C::lane_spacing),
        make_field("rsu_x", &C::rsu_x),
        make_field("rsu_y", &C::rsu_y),
        make_field("slot", &C::slot),
        make_field("task_mean_interval", &C::task_mean_interval),
        make_field("task_size_min", &C::task_size_min),
        make_field("task_size_max", &C::task_size_max),
        make_field("p_max", &C::p_max),
        make_field("bandwidth", &C::bandwidth),
        make_field("noise", &C::noise),
        make_field("shadow_sigma", &C::shadow_sigma),
        make_field("decorrelation", &C::decorrelation),
        make_field("carrier", &C::carrier),
        make_field("lightspeed", &C::lightspeed),
        make_field("segment_len", &C::segment_len),
        make_field("penalty_decay", &C::penalty_decay),
        make_field("penalty_weight", &C::penalty_weight),
        make_field("reward_scale", &C::reward_scale),
        make_field("discount", &C::discount),
        make_field("gain_db_norm", &C::gain_db_norm),
        make_field("aoi_norm", &C::aoi_norm),
        make_field("count_norm", &C::count_norm),
        make_field("train_slots", &C::train_slots),
        make_field("test_slots", &C::test_slots),
        make_field("hidden", &C::hidden),
        make_field("lr_actor", &C::lr_actor),
        make_field("lr_critic", &C::lr_critic),
        make_field("lr_temperature", &C::lr_temperature),
        make_field("init_temperature", &C::init_temperature),
        make_field("target_entropy", &C::target_entropy),
        make_field("buffer_size", &C::buffer_size),
        make_field("warmup", &C::warmup),
        make_field("batch_size", &C::batch_size),
        make_field("target_update_period", &C::target_update_period),
        make_field("tau1", &C::tau1),
        make_field("tau2", &C::tau2),
        make_field("iteration_choices", &C::iteration_choices),
        make_field("train_interval", &C::train_interval),
        make_field("gnn_hidden1", &C::gnn_hidden1),
        make_field("gnn_hidden2", &C::gnn_hidden2),
        make_field("gnn_critic_hidden", &C::gnn_critic_hidden),
        make_field("lr_gnn", &C::lr_gnn),
        make_field("lr_gnn_critic", &C::lr_gnn_critic),
        make_field("gnn_buffer_size", &C::gnn_buffer_size),
        make_field("gnn_warmup", &C::gnn_warmup),
        make_field("gnn_batch_size", &C::gnn_batch_size),
        make_field("gnn_target_update_period", &C::gnn_target_update_period),
        make_field("tau_gnn", &C::tau_gnn),
        make_field("gnn_train_period", &C::gnn_train_period),
        make_field("gnn_iterations", &C::gnn_iterations),
        make_field("gdbr_kappa", &C::gdbr_kappa),
        make_field("bits_per_param", &C::bits_per_param),
    };
    return table;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid configuration: " + what);
}

}  // namespace

int ScenarioConfig::segments_per_lane() const {
    return static_cast<int>(std::llround(2.0 * rsu_radius / segment_len));
}

int ScenarioConfig::node_count() const { return segments_per_lane() * lanes; }

double ScenarioConfig::lane_speed(int lane) const {
    return lane_speeds.empty() ? speed : lane_speeds.at(static_cast<std::size_t>(lane));
}

double ScenarioConfig::lane_rate(int lane) const {
    return lane_arrival_rates.empty() ? arrival_rate / lanes
                                      : lane_arrival_rates.at(static_cast<std::size_t>(lane));
}

double ScenarioConfig::lane_y(int lane) const { return lane * lane_spacing; }

void ScenarioConfig::validate() const {
    require(lanes >= 1, "lanes must be >= 1");
    require(slot > 0.0, "slot must be > 0");
    require(rsu_radius > 0.0, "rsu_radius must be > 0");
    require(segment_len > 0.0, "segment_len must be > 0");
    const double ratio = 2.0 * rsu_radius / segment_len;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 && ratio >= 1.0,
            "2*rsu_radius must be divisible by segment_len");
    require(lane_speeds.empty() || static_cast<int>(lane_speeds.size()) == lanes,
            "lane_speeds must list one value per lane");
    require(lane_arrival_rates.empty() || static_cast<int>(lane_arrival_rates.size()) == lanes,
            "lane_arrival_rates must list one value per lane");
    for (int l = 0; l < lanes; ++l) {
        require(lane_speed(l) >= 0.0, "lane speeds must be >= 0");
        require(lane_rate(l) >= 0.0, "arrival rates must be >= 0");
    }
    require(task_size_min > 0.0 && task_size_min <= task_size_max, "need 0 < task_size_min <= task_size_max");
    require(task_mean_interval > 0.0, "task_mean_interval must be > 0");
    require(penalty_decay > 0.0 && penalty_decay <= 1.0, "penalty_decay must lie in (0,1]");
    require(discount >= 0.0 && discount <= 1.0, "discount must lie in [0,1]");
    require(p_max > 0.0 && bandwidth > 0.0 && noise > 0.0, "p_max, bandwidth and noise must be > 0");
    require(shadow_sigma >= 0.0 && decorrelation > 0.0, "shadowing parameters out of range");
    require(carrier > 0.0 && lightspeed > 0.0, "carrier and lightspeed must be > 0");
    require(v2v_range >= 0.0, "v2v_range must be >= 0");
    require(reward_scale > 0.0 && penalty_weight >= 0.0, "reward weights out of range");
    require(gain_db_norm > 0.0 && aoi_norm > 0.0 && count_norm > 0.0, "normalisers must be > 0");
    require(train_slots >= 0 && test_slots >= 0, "slot counts must be >= 0");
    require(hidden >= 1 && gnn_hidden1 >= 1 && gnn_hidden2 >= 1 && gnn_critic_hidden >= 1,
            "layer widths must be >= 1");
    require(lr_actor > 0.0 && lr_critic > 0.0 && lr_temperature > 0.0 && lr_gnn > 0.0 && lr_gnn_critic > 0.0,
            "learning rates must be > 0");
    require(init_temperature > 0.0, "init_temperature must be > 0");
    require(buffer_size >= 1 && gnn_buffer_size >= 1, "buffer sizes must be >= 1");
    require(warmup >= 1 && gnn_warmup >= 1, "warm-up thresholds must be >= 1");
    require(batch_size >= 1 && gnn_batch_size >= 1, "batch sizes must be >= 1");
    require(target_update_period >= 1 && gnn_target_update_period >= 1, "target update periods must be >= 1");
    require(tau1 > 0.0 && tau1 <= 1.0 && tau2 > 0.0 && tau2 <= 1.0 && tau_gnn > 0.0 && tau_gnn <= 1.0,
            "soft-update rates must lie in (0,1]");
    require(!iteration_choices.empty(), "iteration_choices must not be empty");
    for (int it : iteration_choices) require(it >= 1, "iteration_choices entries must be >= 1");
    require(train_interval >= 1, "train_interval must be >= 1");
    require(gnn_train_period >= 1 && gnn_iterations >= 1, "GNN schedule must be >= 1");
    require(gdbr_kappa >= 0.0, "gdbr_kappa must be >= 0");
    require(bits_per_param >= 1, "bits_per_param must be >= 1");
}

std::string ScenarioConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) {
        out += f.name;
        out += " = ";
        out += f.get(*this);
        out += '\n';
    }
    return out;
}

std::uint64_t ScenarioConfig::hash() const {
    // FNV-1a over the canonical text
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_text()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void set_config_value(ScenarioConfig& config, std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (f.name == key) {
            f.set(config, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

ScenarioConfig parse_config(std::string_view text, ScenarioConfig base) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            set_config_value(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

}  // namespace vecaoi
