#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace roadcell {

// splitmix64; used to derive independent substream seeds from (seed, tags).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, for turning detector/site ids into substream tags.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x8f1bbcdcbfa53e0bULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Phase tags for substream derivation. Each (seed, site, phase) pair owns its
// own draw sequence, so scheduling order never changes what a phase sees.
enum class Stream : std::uint64_t {
    vehicles = 1,
    calls = 2,
    handover = 3,
    reconcile = 4,
    synth_day = 5,
    synth_flow = 6,
    synth_speed = 7,
    flow_noise = 8,
    train = 9,
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t site, Stream phase) {
    return mix_seed(seed, site, static_cast<std::uint64_t>(phase));
}

// mt19937_64 with hand-rolled samplers. The engine's sequence is fixed by the
// standard and the samplers below use only elementary float ops, so identical
// seeds give identical draws on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; two uniforms per draw, no cached state.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), u1 in [0,1)
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

    double lognormal(double mu_log, double sigma_log) {
        return std::exp(mu_log + sigma_log * normal());
    }

    // Counts unit-rate renewal events in [0, mean]; exact for the sizes we
    // draw (per-slot vehicle counts). Very large means fall back to a normal
    // approximation to bound the loop.
    std::int64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean > 1e5) {
            double v = std::round(normal(mean, std::sqrt(mean)));
            return v < 0 ? 0 : static_cast<std::int64_t>(v);
        }
        std::int64_t k = 0;
        double acc = exponential(1.0);
        while (acc <= mean) {
            ++k;
            acc += exponential(1.0);
        }
        return k;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace roadcell
