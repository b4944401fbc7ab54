#pragma once

#include <complex>
#include <span>
#include <vector>

#include "vecaoi/config.hpp"
#include "vecaoi/rng.hpp"

namespace vecaoi {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point a, Point b);

// Per-vehicle fading state between the vehicle and the RSU.
struct ChannelState {
    double shadow_db = 0.0;           // log-normal shadowing, dB
    std::complex<double> rayleigh{};  // small-scale fading coefficient
    Point last_position{};
    double doppler_hz = 0.0;
};

// 28 GHz line-of-sight model: 61.4 + 20 log10(d), d clamped to >= 1 m.
double path_loss_db(double distance_m);

// Shadowing correlation between consecutive slots for a displacement.
double shadow_correlation(double displacement_m, double decorrelation_m);

// One AR(1) shadowing step with an explicit innovation `e` ~ N(0,1).
double shadow_update(double shadow_db, double correlation, double sigma_db, double e);

double doppler_hz(double speed, const ScenarioConfig& config);

// Zeroth-order Bessel function of the first kind.
double bessel_j0(double x);

// Jakes lag-one correlation J0(2 pi f_d tau).
double rayleigh_correlation(double speed, const ScenarioConfig& config);

ChannelState init_channel(Point position, double speed, const ScenarioConfig& config, RngStream& rng);

// Advances shadowing to `new_position` and records it as last_position.
double step_shadowing(ChannelState& state, Point new_position, const ScenarioConfig& config, RngStream& rng);

std::complex<double> step_rayleigh(ChannelState& state, double speed, const ScenarioConfig& config,
                                   RngStream& rng);

// Linear power gain 10^(-(pl + shadow)/10) * |h|^2.
double channel_power_gain(double shadow_db, double path_loss_db, std::complex<double> h);

double current_gain(const ChannelState& state, Point rsu);

// Shannon rates under mutual interference plus model-upload interference:
// rate_i = B log2(1 + g_i p_i / (sum_{j != i} g_j p_j + sum_k g_k p_k + noise)).
std::vector<double> compute_rates(std::span<const double> powers, std::span<const double> gains,
                                  std::span<const double> upload_powers, std::span<const double> upload_gains,
                                  const ScenarioConfig& config);

}  // namespace vecaoi
