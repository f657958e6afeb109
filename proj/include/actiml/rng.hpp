#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "actiml/errors.hpp"

// Self-contained, documented PRNG stack. Every random draw in the toolkit
// flows through these types so results are reproducible from the recorded
// seeds alone, independent of platform or standard-library version.
//
//   SplitMix64          seed expansion / 64-bit mixing (Steele, Lea & Flood)
//   split_seed(b, k)    seed of sub-stream k derived from base seed b
//   Rng                 xoshiro256** 1.0 (Blackman & Vigna), SplitMix64-seeded
//
// Bit-compatibility with any external library's "random_state" is not
// promised; determinism within this toolkit is.

namespace actiml {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Sub-stream seed derivation: one SplitMix64 step over the base seed offset
// by the stream index times the 64-bit golden ratio. Used for per-tree
// forest streams, the network's shuffle stream, and per-participant
// synthetic-data streams.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
    return SplitMix64(base + 0x9E3779B97F4A7C15ULL * (stream + 1)).next();
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw DomainError("next_below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
};

// Fisher-Yates from the back. In-place, one next_below per position.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng.next_below(i)]);
    }
}

// Box-Muller, cosine branch only. Two uniforms per draw, no cached state.
inline double sample_standard_normal(Rng& rng) {
    const double u1 = 1.0 - rng.next_double(); // (0, 1], keeps log finite
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Marsaglia-Tsang for shape >= 1; boosted by one for shape < 1.
inline double sample_gamma(Rng& rng, double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) {
        throw DomainError("sample_gamma: shape and scale must be positive");
    }
    if (shape < 1.0) {
        const double u = 1.0 - rng.next_double(); // (0, 1]
        return sample_gamma(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = sample_standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v * scale;
        }
    }
}

// Knuth's product method, kept in a safe exp() range by Poisson additivity:
// rates above 30 are split into independent chunks and summed.
inline std::int64_t sample_poisson(Rng& rng, double mean) {
    if (mean < 0.0) throw DomainError("sample_poisson: mean must be non-negative");
    std::int64_t total = 0;
    const auto knuth = [&rng](double lambda) {
        const double limit = std::exp(-lambda);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= rng.next_double();
        } while (p > limit);
        return k - 1;
    };
    while (mean > 30.0) {
        total += knuth(30.0);
        mean -= 30.0;
    }
    total += knuth(mean);
    return total;
}

// Overdispersed counts: negative binomial sampled as a Gamma(dispersion,
// mean/dispersion) mixture of Poissons. Variance = mean + mean^2/dispersion.
inline std::int64_t sample_gamma_poisson(Rng& rng, double mean, double dispersion) {
    const double lambda = sample_gamma(rng, dispersion, mean / dispersion);
    return sample_poisson(rng, lambda);
}

} // namespace actiml
