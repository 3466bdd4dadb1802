#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/quadrature.hpp"
#include "csfft/rng.hpp"

namespace csfft {

/// One (magnitude, frequency) pair contributing v * e^{2 pi i f t} to the signal.
struct Tone {
    cplx v;
    real f = 0.0;   // Hz
};

struct ToneSet {
    std::vector<Tone> tones;
    real eta = 0.0;   // minimum pairwise frequency separation (Hz)

    int k() const { return static_cast<int>(tones.size()); }

    real total_power() const {   // sum |v_i|^2
        real s = 0.0;
        for (const auto& t : tones) s += std::norm(t.v);
        return s;
    }

    real magnitude_l1() const {   // sum |v_i|
        real s = 0.0;
        for (const auto& t : tones) s += std::abs(t.v);
        return s;
    }

    real min_separation() const {
        if (tones.size() < 2) return eta;
        std::vector<real> f;
        f.reserve(tones.size());
        for (const auto& t : tones) f.push_back(t.f);
        std::sort(f.begin(), f.end());
        real gap = f[1] - f[0];
        for (std::size_t i = 2; i < f.size(); ++i) gap = std::min(gap, f[i] - f[i - 1]);
        return gap;
    }

    std::vector<Tone> sorted_by_frequency() const {
        auto s = tones;
        std::sort(s.begin(), s.end(), [](const Tone& a, const Tone& b) { return a.f < b.f; });
        return s;
    }
};

/// x*(t) = sum_i v_i e^{2 pi i f_i t}
inline cplx evaluate_pure(const ToneSet& tones, real t) {
    real re = 0.0, im = 0.0;
    for (const auto& tone : tones.tones) {
        real s, c;
        sin_cos_cycles(tone.f * t, s, c);
        re += tone.v.real() * c - tone.v.imag() * s;
        im += tone.v.real() * s + tone.v.imag() * c;
    }
    return {re, im};
}

struct NoiseModel {
    enum class Kind { none, gaussian, decay, custom };

    Kind kind = Kind::none;
    real variance = 0.0;     // gaussian: E|g(t)|^2 per sample
    real decay_rate = 0.0;   // decay: g(t) = x*(t) (e^{-t/(rate*T)} - 1)
    std::function<cplx(real)> custom;   // must be deterministic in t

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(real variance) {
        NoiseModel n;
        n.kind = Kind::gaussian;
        n.variance = variance;
        return n;
    }
    static NoiseModel decay(real rate) {
        NoiseModel n;
        n.kind = Kind::decay;
        n.decay_rate = rate;
        return n;
    }
    static NoiseModel make_custom(std::function<cplx(real)> fn) {
        NoiseModel n;
        n.kind = Kind::custom;
        n.custom = std::move(fn);
        return n;
    }
};

/// Sampler for x(t) = x*(t) + g(t) over [0, T]. Immutable apart from the
/// atomic sample tally, so concurrent sampling is safe and reproducible.
class SignalSource {
public:
    SignalSource(ToneSet tones, NoiseModel noise, real duration, real band_limit, uint64_t seed)
        : tones_(std::move(tones)),
          noise_(std::move(noise)),
          T_(duration),
          F_(band_limit),
          seed_(seed) {
        if (T_ <= 0.0) throw ConfigError("SignalSource: duration T must be positive");
        for (const auto& t : tones_.tones) {
            if (!std::isfinite(std::abs(t.v)) || !std::isfinite(t.f))
                throw ConfigError("SignalSource: tone values must be finite");
            if (t.f < -F_ || t.f > F_)
                throw ConfigError("SignalSource: tone frequency outside [-F, F]");
        }
    }

    /// Counted access; the only path the recovery algorithm may use.
    cplx sample(real t) const {
        if (t < 0.0 || t > T_) throw std::domain_error("SignalSource::sample: t outside [0, T]");
        counter_.fetch_add(1, std::memory_order_relaxed);
        return evaluate_pure(tones_, t) + noise_at(t);
    }

    /// Uncounted evaluation for metrics and diagnostics only.
    cplx probe(real t) const { return evaluate_pure(tones_, t) + noise_at(t); }

    cplx noise_at(real t) const {
        switch (noise_.kind) {
            case NoiseModel::Kind::none:
                return {0.0, 0.0};
            case NoiseModel::Kind::gaussian:
                return noise_.variance > 0.0 ? keyed_complex_gauss(seed_, t, noise_.variance)
                                             : cplx{0.0, 0.0};
            case NoiseModel::Kind::decay:
                return evaluate_pure(tones_, t) *
                       (std::exp(-t / (noise_.decay_rate * T_)) - 1.0);
            case NoiseModel::Kind::custom:
                return noise_.custom(t);
        }
        return {0.0, 0.0};
    }

    uint64_t samples_used() const { return counter_.load(std::memory_order_relaxed); }
    void reset_counter() const { counter_.store(0, std::memory_order_relaxed); }

    const ToneSet& tones() const { return tones_; }
    const NoiseModel& noise() const { return noise_; }
    real duration() const { return T_; }
    real band_limit() const { return F_; }
    uint64_t seed() const { return seed_; }

private:
    ToneSet tones_;
    NoiseModel noise_;
    real T_;
    real F_;
    uint64_t seed_;
    mutable std::atomic<uint64_t> counter_{0};
};

/// Noise level N^2 = (1/T) int_0^T |g|^2 dt + delta * sum |v_i|^2.
/// Closed form for the none/gaussian models, quadrature otherwise.
inline real noise_level(const SignalSource& source, real delta) {
    if (delta < 0.0) throw ConfigError("noise_level: delta must be non-negative");
    real integral_term = 0.0;
    switch (source.noise().kind) {
        case NoiseModel::Kind::none:
            break;
        case NoiseModel::Kind::gaussian:
            integral_term = source.noise().variance;
            break;
        default: {
            const real T = source.duration();
            integral_term =
                integrate([&](real t) { return std::norm(source.noise_at(t)); }, 0.0, T) / T;
            break;
        }
    }
    return integral_term + delta * source.tones().total_power();
}

struct MagnitudeRange {
    real lo = 1.0;
    real hi = 1.0;
};

/// Random k-tone instance: frequencies uniform on [-F, F] with pairwise gaps
/// >= eta via rejection, magnitudes uniform in [lo, hi] with random phase.
inline SignalSource make_instance(int k, real F, real eta, MagnitudeRange magnitudes,
                                  NoiseModel noise, real T, uint64_t seed) {
    if (k < 1) throw ConfigError("make_instance: k must be >= 1");
    if (F <= 0.0) throw ConfigError("make_instance: band limit F must be positive");
    if (T <= 0.0) throw ConfigError("make_instance: duration T must be positive");
    if (k > 1 && k * eta >= 2.0 * F)
        throw ConfigError("make_instance: infeasible separation, require k*eta < 2F");

    Rng rng(seed);
    std::vector<real> freqs;
    freqs.reserve(k);
    int tries = 0;
    while (static_cast<int>(freqs.size()) < k) {
        if (++tries > 200000)
            throw ConfigError("make_instance: rejection sampling failed, separation too tight");
        real f = rng.uniform(-F, F);
        bool ok = true;
        for (real g : freqs)
            if (std::abs(f - g) < eta) { ok = false; break; }
        if (ok) freqs.push_back(f);
    }

    ToneSet set;
    set.eta = eta;
    for (real f : freqs) {
        real mag = rng.uniform(magnitudes.lo, magnitudes.hi);
        real phase = rng.uniform();
        set.tones.push_back({mag * unit_phase(phase), f});
    }
    return SignalSource(std::move(set), std::move(noise), T, F, seed);
}

}  // namespace csfft
