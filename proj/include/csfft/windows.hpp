#pragma once

#include <algorithm>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/fft.hpp"

namespace csfft {

struct WindowKnobs {
    real c_sigma = 0.62;    // gaussian width factor: sigma_g = c_sigma * B * sqrt(L) / alpha
    real c_support = 1.05;  // half-support factor: half = ceil(c_support * sigma_g * sqrt(L))
};

/// Flat window: a scaled-sinc times Gaussian whose spectrum is ~1 on the inner
/// (1-alpha) fraction of a hash bin and ~0 outside the bin, with leakage below
/// sqrt(delta/k) everywhere. Coefficients are indexed by a centred integer
/// n in [-half, half] and normalized to unit passband gain.
struct FlatWindow {
    int B = 1;
    real delta = 0.0;
    real alpha = 0.0;
    int half = 0;
    int M = 0;            // support length, 2*half + 1
    real sigma_g = 0.0;   // gaussian width in sample units
    real pass_edge = 0.0; // (1 - alpha) * pi / B: |offset| below this sees unit gain
    real stop_edge = 0.0; // pi / B: |offset| beyond this sees ~zero gain
    std::vector<real> g;  // g[half + n]

    real coeff(int n) const { return g[static_cast<std::size_t>(half + n)]; }

    real energy() const {   // sum g_n^2
        real s = 0.0;
        for (real v : g) s += v * v;
        return s;
    }

    /// Exact trigonometric sum: G_hat(theta) = sum_n g_n e^{i theta n}.
    /// Real and even in theta because the window is symmetric.
    cplx spectrum(real theta) const {
        real acc = coeff(0);
        for (int n = 1; n <= half; ++n) acc += 2.0 * coeff(n) * std::cos(theta * n);
        return {acc, 0.0};
    }

    /// spectrum() on the uniform angle grid theta_j = 2 pi j / n_grid, j = 0..n_grid-1,
    /// computed by folding the coefficients mod n_grid and one FFT. n_grid must be
    /// a power of two. Matches spectrum() up to roundoff.
    std::vector<real> spectrum_grid(int n_grid) const {
        std::vector<cplx> folded(static_cast<std::size_t>(n_grid), cplx{0.0, 0.0});
        for (int n = -half; n <= half; ++n) {
            int q = ((n % n_grid) + n_grid) % n_grid;
            folded[static_cast<std::size_t>(q)] += coeff(n);
        }
        fft_pow2(folded, +1);
        std::vector<real> out(static_cast<std::size_t>(n_grid));
        for (int j = 0; j < n_grid; ++j) out[static_cast<std::size_t>(j)] = folded[static_cast<std::size_t>(j)].real();
        return out;
    }
};

inline FlatWindow build_window(int B, int k, real delta, real alpha,
                               const WindowKnobs& knobs = {}) {
    if (B < 1) throw ConfigError("build_window: B must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("build_window: require 0 < delta < 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("build_window: require 0 < alpha < 1");
    if (k < 1) throw ConfigError("build_window: k must be >= 1");

    FlatWindow w;
    w.B = B;
    w.delta = delta;
    w.alpha = alpha;
    const real L = std::log(static_cast<real>(k) / delta);
    w.sigma_g = knobs.c_sigma * static_cast<real>(B) * std::sqrt(L) / alpha;
    w.half = static_cast<int>(std::ceil(knobs.c_support * w.sigma_g * std::sqrt(L)));
    w.M = 2 * w.half + 1;
    w.pass_edge = (1.0 - alpha) * kPi / B;
    w.stop_edge = kPi / B;

    // Sinc cutoff at the middle of the transition band; the Gaussian then rolls
    // the spectrum from 1 to 0 across [(1-alpha) pi/B, pi/B].
    const real cutoff = (1.0 - 0.5 * alpha) * kPi / B;
    w.g.resize(static_cast<std::size_t>(w.M));
    const real inv2s2 = 1.0 / (2.0 * w.sigma_g * w.sigma_g);
    real gain = 0.0;
    for (int n = -w.half; n <= w.half; ++n) {
        real base = (n == 0) ? cutoff : std::sin(cutoff * n) / static_cast<real>(n);
        real v = base * std::exp(-static_cast<real>(n) * static_cast<real>(n) * inv2s2);
        w.g[static_cast<std::size_t>(w.half + n)] = v;
        gain += v;
    }
    for (real& v : w.g) v /= gain;
    return w;
}

/// Idealised response used by analysis-mode checks: 1 on the flat region,
/// 0 beyond the bin edge, and the clamped true spectrum in between (any
/// monotone [0,1] interpolation is admissible there).
inline real ideal_response(const FlatWindow& w, real offset_angle) {
    real a = std::abs(offset_angle);
    if (a <= w.pass_edge) return 1.0;
    if (a >= w.stop_edge) return 0.0;
    return std::clamp(w.spectrum(a).real(), 0.0, 1.0);
}

}  // namespace csfft
