#pragma once

// Fully specified PRNG for reproducible synthetic data: SplitMix64 words,
// uniforms as word/2^64, Gaussians by Box-Muller on consecutive uniform
// pairs. No platform generator is involved anywhere in the toolkit, so golden
// files stay byte-identical across runs.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace q4 {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1): next 64-bit word scaled by 2^-64.
    double next_uniform() {
        return static_cast<double>(next()) * 0x1.0p-64;
    }

private:
    std::uint64_t state_;
};

/// Box-Muller transform over a SplitMix64 stream. Each uniform pair yields
/// two variates; both are handed out before the next pair is drawn.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = rng_.next_uniform();
        double u2 = rng_.next_uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-64;  // log(0) guard; word 0 maps to 2^-64
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace q4
