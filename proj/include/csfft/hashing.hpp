#pragma once

#include <cmath>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/fft.hpp"
#include "csfft/rng.hpp"
#include "csfft/signal_model.hpp"
#include "csfft/windows.hpp"

namespace csfft {

/// Static parameters of one hashing family. B is kept a power of two so the
/// bin transform is a plain radix-2 FFT.
struct HashConfig {
    int B = 1;
    real delta = 1e-6;
    real alpha = 0.2;
    real eta = 1.0;   // Hz
    real F = 1.0;     // Hz
    int k = 1;

    static HashConfig make(int k, real F, real eta, real delta, real alpha, real bins_per_tone) {
        if (k < 1) throw ConfigError("HashConfig: k must be >= 1");
        if (eta <= 0.0) throw ConfigError("HashConfig: eta must be positive");
        if (F <= 0.0) throw ConfigError("HashConfig: F must be positive");
        if (bins_per_tone < 2.0) throw ConfigError("HashConfig: bins_per_tone must be >= 2");
        HashConfig c;
        c.B = next_pow2(static_cast<int>(std::ceil(bins_per_tone * k)));
        c.delta = delta;
        c.alpha = alpha;
        c.eta = eta;
        c.F = F;
        c.k = k;
        return c;
    }
};

/// One random dilation/shift (sigma, b) defining the frequency hash.
struct HashDraw {
    real sigma = 0.0;   // s
    real b = 0.0;       // Hz
};

/// sigma ~ U[1/(B eta), 2/(B eta)], then b ~ U[0, ceil(F/eta)/(sigma B)].
inline HashDraw draw_hash(const HashConfig& cfg, Rng& rng) {
    HashDraw d;
    d.sigma = rng.uniform(1.0 / (cfg.B * cfg.eta), 2.0 / (cfg.B * cfg.eta));
    d.b = rng.uniform(0.0, std::ceil(cfg.F / cfg.eta) / (d.sigma * cfg.B));
    return d;
}

/// pi_{sigma,b}(f) = 2 pi sigma (f - b) mod 2 pi, in [0, 2 pi).
inline real permute_angle(real f, const HashDraw& d) {
    return kTwoPi * positive_mod(d.sigma * (f - d.b), 1.0);
}

/// h_{sigma,b}(f) = round(pi_{sigma,b}(f) B / 2 pi) mod B, in [0, B).
inline int hash_bin(real f, const HashDraw& d, int B) {
    real cycles = positive_mod(d.sigma * (f - d.b), 1.0);
    int bin = static_cast<int>(std::lround(cycles * B));
    return bin % B;   // cycles just below 1 rounds to B, which wraps to 0
}

/// o_{sigma,b}(f) = pi_{sigma,b}(f) - (2 pi / B) h_{sigma,b}(f), in [-pi/B, pi/B].
inline real offset_angle(real f, const HashDraw& d, int B) {
    real cycles = positive_mod(d.sigma * (f - d.b), 1.0);
    real bin = std::round(cycles * B);
    return kTwoPi * (cycles - bin / B);
}

/// Collision event: another tone of the set shares f's bin.
inline bool event_collision(real f, const ToneSet& tones, const HashDraw& d, int B) {
    int mine = hash_bin(f, d, B);
    for (const auto& t : tones.tones) {
        if (t.f == f) continue;
        if (hash_bin(t.f, d, B) == mine) return true;
    }
    return false;
}

/// Large-offset event: |o_{sigma,b}(f)| >= (1 - alpha) pi / B.
inline bool event_off(real f, const HashDraw& d, int B, real alpha) {
    return std::abs(offset_angle(f, d, B)) >= (1.0 - alpha) * kPi / B;
}

/// The B complex bin values from one weighted arithmetic-progression
/// measurement.
struct BinMeasurement {
    std::vector<cplx> u_hat;
    HashDraw draw;
    real time_offset = 0.0;   // start of the progression; samples at time_offset + sigma*j, j=1..M
    real phase_ref = 0.0;     // centre time: u_hat[h(f)] ~ v e^{2 pi i f phase_ref}
    int samples = 0;

    /// Demodulated tone estimate for a located frequency.
    cplx estimate(real f, int B) const {
        return u_hat[static_cast<std::size_t>(hash_bin(f, draw, B))] * unit_phase(-f * phase_ref);
    }
};

inline real hash_to_bins_span(const HashDraw& d, const FlatWindow& w) {
    return d.sigma * (w.M + 1);
}

/// Samples x at t_j = tau + sigma j (j = 1..M), weights by the window, folds
/// mod B and takes the B-point DFT. Consumes exactly M samples.
inline BinMeasurement hash_to_bins(const SignalSource& source, const HashDraw& d, real tau,
                                   const FlatWindow& w) {
    const int B = w.B;
    const real sigma = d.sigma;
    const real span = sigma * w.M;
    if (tau < 0.0 || tau + span > source.duration())
        throw DurationError("hash_to_bins: progression does not fit in [0, T]", span);

    BinMeasurement m;
    m.draw = d;
    m.time_offset = tau;
    m.phase_ref = tau + sigma * (w.half + 1);
    m.samples = w.M;
    std::vector<cplx> folded(static_cast<std::size_t>(B), cplx{0.0, 0.0});

    // modulation e^{-2 pi i sigma b n} by rotation recurrence, renormalized periodically
    const cplx step = unit_phase(-positive_mod(sigma * d.b, 1.0));
    cplx rot = unit_phase(-positive_mod(sigma * d.b * (-w.half), 1.0));
    int q = ((-w.half) % B + B) % B;
    for (int n = -w.half; n <= w.half; ++n) {
        const real t = m.phase_ref + sigma * n;
        folded[static_cast<std::size_t>(q)] += w.coeff(n) * source.sample(t) * rot;
        rot *= step;
        if ((n & 1023) == 0) rot /= std::abs(rot);
        if (++q == B) q = 0;
    }
    fft_pow2(folded, -1);
    m.u_hat = std::move(folded);
    return m;
}

}  // namespace csfft
