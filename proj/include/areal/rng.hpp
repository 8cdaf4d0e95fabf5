#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace areal {

/// 64-bit avalanche mix (splitmix64 finalizer). Used to derive independent
/// stream and replicate seeds from one base seed, so that parallel and serial
/// runs of a replicated experiment consume identical random streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for a named sub-stream (e.g. auxiliary draws vs target draws).
inline std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t stream_tag) {
    return mix64(base_seed ^ (0xD1B54A32D192ED03ULL * (stream_tag + 1)));
}

/// Seed for one replicate within a stream. Counter based: replicate r never
/// touches the generator state of replicate r-1.
inline std::uint64_t replicate_seed(std::uint64_t stream_seed, std::uint64_t replicate) {
    return mix64(stream_seed + 0x9E3779B97F4A7C15ULL * replicate);
}

/// Deterministic RNG: mt19937_64 core (bit-specified by the standard) plus a
/// self-contained Poisson sampler, so simulated fields do not depend on the
/// standard library's unspecified poisson_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in the open interval (0,1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    /// Poisson draw with the given mean. Inversion below mean 10, transformed
    /// rejection (Hormann's PTRS) above.
    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::int64_t poisson_inversion(double mean) {
        const double limit = std::exp(-mean);
        double prod = 1.0;
        std::int64_t k = 0;
        do {
            ++k;
            prod *= uniform();
        } while (prod > limit);
        return k - 1;
    }

    std::int64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                kf * loglam - mean - std::lgamma(kf + 1.0)) {
                return static_cast<std::int64_t>(kf);
            }
        }
    }

    std::mt19937_64 gen_;
};

} // namespace areal
