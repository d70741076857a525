#pragma once

#include <cstdint>
#include <random>

namespace mptrack {

/// Per-caller random stream. Every sampler in the library takes one of
/// these explicitly; there is no global RNG state.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::mt19937_64& engine() { return engine_; }

    /// Uniform on (0, 1] (never returns 0, safe for log()).
    double uniform01() {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
        return 1.0 - u;
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(engine_);
    }

    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<int>(mean)(engine_);
    }

    /// Derive an independent child stream (used for per-run / per-scan splits).
    RandomStream spawn() {
        std::uint64_t s = engine_();
        return RandomStream(s ^ 0x9e3779b97f4a7c15ull);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mptrack
