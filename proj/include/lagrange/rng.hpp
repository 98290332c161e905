#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace lagrange {

// Deterministic 64-bit generator (splitmix64). Every stochastic choice in the
// toolkit draws from one of these, keyed explicitly, so runs are reproducible
// across processes and thread schedules.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0, n). Lemire's method, no platform-dependent
    // std::uniform_int_distribution involved.
    uint64_t bounded(uint64_t n) {
        if (n == 0) return 0;
        __uint128_t m = static_cast<__uint128_t>(next()) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = static_cast<__uint128_t>(next()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller. Consumes two draws per call.
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t state_;
};

// FNV-1a over a string, for deriving per-key RNG streams from names.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stream keyed by (seed, name): independent deterministic substreams.
inline SplitMix64 keyed_stream(uint64_t seed, std::string_view name) {
    SplitMix64 mix(seed ^ fnv1a64(name));
    mix.next();  // decorrelate from the raw key
    return mix;
}

}  // namespace lagrange
