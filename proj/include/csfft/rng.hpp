#pragma once

#include <cmath>
#include <cstdint>

#include "csfft/common.hpp"

namespace csfft {

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline real to_unit(uint64_t x) {
    // (0, 1]; never returns 0 so it is safe under log()
    return static_cast<real>((x >> 11) + 1) * 0x1.0p-53;
}

}  // namespace detail

/// xoshiro256** seeded through splitmix64. Hand-rolled so that draws are
/// bit-identical across platforms and standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = detail::splitmix64(sm);
    }

    uint64_t next_u64() {
        auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        uint64_t result = rotl(s_[1] * 5, 7) * 9;
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in (0, 1].
    real uniform() { return detail::to_unit(next_u64()); }

    /// Uniform in [lo, hi).
    real uniform(real lo, real hi) { return lo + (hi - lo) * (uniform() - 0x1.0p-53); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi_inclusive - lo + 1));
    }

    /// Standard normal via Box-Muller.
    real gauss() {
        real u1 = uniform();
        real u2 = uniform();
        real s, c;
        sin_cos_cycles(u2, s, c);
        (void)s;
        return std::sqrt(-2.0 * std::log(u1)) * c;
    }

    /// Derive an independent stream (for per-stage / per-trial randomness).
    Rng fork() { return Rng(next_u64()); }

private:
    uint64_t s_[4];
};

/// Complex Gaussian keyed by (seed, t): repeated queries at the same time point
/// return the same draw, and queries are order- and thread-independent.
/// E|g|^2 equals `variance`.
inline cplx keyed_complex_gauss(uint64_t seed, real t, real variance) {
    uint64_t tb;
    static_assert(sizeof(real) == sizeof(uint64_t));
    __builtin_memcpy(&tb, &t, sizeof(tb));
    uint64_t k1 = detail::mix64(seed ^ detail::mix64(tb ^ 0x9E3779B97F4A7C15ULL));
    uint64_t k2 = detail::mix64(k1 ^ 0xD1B54A32D192ED03ULL);
    real u1 = detail::to_unit(k1);
    real u2 = detail::to_unit(k2);
    real r = std::sqrt(-std::log(u1) * variance);   // |g| ~ Rayleigh
    real s, c;
    sin_cos_cycles(u2, s, c);
    return {r * c, r * s};
}

}  // namespace csfft
