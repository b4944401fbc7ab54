#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace vecaoi {

// Seeded random stream. Equal seeds give equal draw sequences.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    // Exponential variate with the given mean (not rate).
    double exponential_mean(double mean) {
        return std::exponential_distribution<double>(1.0 / mean)(engine_);
    }
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal(0.0, 1.0);
        const double im = normal(0.0, 1.0);
        return {s * re, s * im};
    }

    // Independent child stream; used to give subsystems their own sequences.
    RngStream split() { return RngStream(engine_()); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace vecaoi
