#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ngspot {

// Deterministic random machinery. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, and every distribution below is
// implemented by hand so that identical seeds give identical draws on every
// platform and at every optimization level.

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent per-item seed from a master seed and an index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index));
}

/// FNV-1a 64-bit hash, used to fold string identities into seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0,1) with 53-bit resolution.
    double uniform_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_double();
    }

    /// Unbiased uniform integer in [lo, hi], rejection-sampled.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
        const std::uint64_t min = (0ULL - range) % range;  // 2^64 mod range
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x < min);
        return lo + static_cast<std::int64_t>(x % range);
    }

    /// Poisson draw via Knuth's product method; fine for small lambda.
    int poisson(double lambda) {
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform_double();
        } while (p > limit);
        return k - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ngspot
