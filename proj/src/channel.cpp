#include "vecaoi/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vecaoi {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double path_loss_db(double distance_m) { return 61.4 + 20.0 * std::log10(std::max(distance_m, 1.0)); }

double shadow_correlation(double displacement_m, double decorrelation_m) {
    return std::exp(-displacement_m / decorrelation_m);
}

double shadow_update(double shadow_db, double correlation, double sigma_db, double e) {
    return correlation * shadow_db + sigma_db * e;
}

double doppler_hz(double speed, const ScenarioConfig& config) { return speed * config.carrier / config.lightspeed; }

double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

double rayleigh_correlation(double speed, const ScenarioConfig& config) {
    return bessel_j0(2.0 * std::numbers::pi * doppler_hz(speed, config) * config.slot);
}

ChannelState init_channel(Point position, double speed, const ScenarioConfig& config, RngStream& rng) {
    ChannelState s;
    s.shadow_db = rng.normal(0.0, config.shadow_sigma);
    s.rayleigh = rng.complex_normal(1.0);
    s.last_position = position;
    s.doppler_hz = doppler_hz(speed, config);
    return s;
}

double step_shadowing(ChannelState& state, Point new_position, const ScenarioConfig& config, RngStream& rng) {
    const double rho = shadow_correlation(distance(state.last_position, new_position), config.decorrelation);
    const double e = rng.normal();
    state.shadow_db = shadow_update(state.shadow_db, rho, config.shadow_sigma, e);
    state.last_position = new_position;
    return state.shadow_db;
}

std::complex<double> step_rayleigh(ChannelState& state, double speed, const ScenarioConfig& config,
                                   RngStream& rng) {
    state.doppler_hz = doppler_hz(speed, config);
    const double rho = rayleigh_correlation(speed, config);
    const double innovation = std::max(0.0, 1.0 - rho * rho);
    // keep the draw count fixed so streams stay aligned across speeds
    const auto q = rng.complex_normal(innovation);
    state.rayleigh = rho * state.rayleigh + q;
    return state.rayleigh;
}

double channel_power_gain(double shadow_db, double pl_db, std::complex<double> h) {
    return std::pow(10.0, -(pl_db + shadow_db) / 10.0) * std::norm(h);
}

double current_gain(const ChannelState& state, Point rsu) {
    return channel_power_gain(state.shadow_db, path_loss_db(distance(state.last_position, rsu)), state.rayleigh);
}

std::vector<double> compute_rates(std::span<const double> powers, std::span<const double> gains,
                                  std::span<const double> upload_powers, std::span<const double> upload_gains,
                                  const ScenarioConfig& config) {
    if (powers.size() != gains.size() || upload_powers.size() != upload_gains.size())
        throw std::invalid_argument("compute_rates: power/gain length mismatch");
    double upload = 0.0;
    for (std::size_t k = 0; k < upload_powers.size(); ++k) upload += upload_gains[k] * upload_powers[k];

    std::vector<double> rates(powers.size(), 0.0);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const double signal = gains[i] * powers[i];
        double interference = 0.0;
        for (std::size_t j = 0; j < powers.size(); ++j)
            if (j != i) interference += gains[j] * powers[j];
        rates[i] = config.bandwidth * std::log2(1.0 + signal / (interference + upload + config.noise));
    }
    return rates;
}

}  // namespace vecaoi
