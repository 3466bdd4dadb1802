#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/fft.hpp"
#include "csfft/signal_model.hpp"

namespace csfft {

/// Least-squares complex magnitudes for fixed frequencies: minimizes
/// sum_j |x_j - sum_m v_m e^{2 pi i f_m t_j}|^2 via the normal equations.
/// Near-duplicate frequencies are reported as an error; mild ill-conditioning
/// falls back to a small ridge.
inline std::vector<cplx> least_squares_magnitudes(const std::vector<real>& freqs,
                                                  const std::vector<real>& times,
                                                  const std::vector<cplx>& samples) {
    const int k = static_cast<int>(freqs.size());
    const int n = static_cast<int>(times.size());
    if (n < k) throw ConfigError("least_squares_magnitudes: need at least k samples");
    if (times.size() != samples.size())
        throw ConfigError("least_squares_magnitudes: times/samples size mismatch");
    const real span = times.empty() ? 1.0 : std::max(times.back() - times.front(), real(1e-12));
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (std::abs(freqs[i] - freqs[j]) < 1e-9 / span)
                throw ConfigError("least_squares_magnitudes: near-duplicate frequencies " +
                                  std::to_string(freqs[i]) + " and " + std::to_string(freqs[j]));

    // G = A^* A (k x k), rhs = A^* x
    std::vector<cplx> G(static_cast<std::size_t>(k) * k, cplx{0, 0});
    std::vector<cplx> rhs(static_cast<std::size_t>(k), cplx{0, 0});
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> row(static_cast<std::size_t>(k));
        for (int m = 0; m < k; ++m) row[static_cast<std::size_t>(m)] = unit_phase(freqs[m] * times[j]);
        for (int a = 0; a < k; ++a) {
            rhs[static_cast<std::size_t>(a)] += std::conj(row[static_cast<std::size_t>(a)]) * samples[static_cast<std::size_t>(j)];
            for (int b = 0; b < k; ++b)
                G[static_cast<std::size_t>(a) * k + b] += std::conj(row[static_cast<std::size_t>(a)]) * row[static_cast<std::size_t>(b)];
        }
    }
    real trace = 0.0;
    for (int a = 0; a < k; ++a) trace += G[static_cast<std::size_t>(a) * k + a].real();
    const real ridge = 1e-12 * trace / k;
    for (int a = 0; a < k; ++a) G[static_cast<std::size_t>(a) * k + a] += ridge;

    // Gaussian elimination with partial pivoting
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int col = 0; col < k; ++col) {
        int piv = col;
        real best = std::abs(G[static_cast<std::size_t>(col) * k + col]);
        for (int r = col + 1; r < k; ++r) {
            real m = std::abs(G[static_cast<std::size_t>(r) * k + col]);
            if (m > best) { best = m; piv = r; }
        }
        if (best < 1e-14 * std::max(trace / k, real(1e-300)))
            throw ConfigError("least_squares_magnitudes: rank-deficient system");
        if (piv != col) {
            for (int c = 0; c < k; ++c)
                std::swap(G[static_cast<std::size_t>(piv) * k + c], G[static_cast<std::size_t>(col) * k + c]);
            std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(col)]);
        }
        for (int r = col + 1; r < k; ++r) {
            cplx factor = G[static_cast<std::size_t>(r) * k + col] / G[static_cast<std::size_t>(col) * k + col];
            for (int c = col; c < k; ++c)
                G[static_cast<std::size_t>(r) * k + c] -= factor * G[static_cast<std::size_t>(col) * k + c];
            rhs[static_cast<std::size_t>(r)] -= factor * rhs[static_cast<std::size_t>(col)];
        }
    }
    std::vector<cplx> v(static_cast<std::size_t>(k));
    for (int r = k - 1; r >= 0; --r) {
        cplx acc = rhs[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < k; ++c) acc -= G[static_cast<std::size_t>(r) * k + c] * v[static_cast<std::size_t>(c)];
        v[static_cast<std::size_t>(r)] = acc / G[static_cast<std::size_t>(r) * k + r];
    }
    return v;
}

struct GridOracleConfig {
    real oversample = 4.0;    // sampling rate multiple of 2F
    real grid_oversample = 8.0;  // frequency grid spacing = 1 / (grid_oversample * T)
    int refine_iters = 90;    // golden-section iterations per tone
};

struct GridOracleResult {
    ToneSet tones;
    bool low_confidence = false;   // residual was ill-conditioned / noise-floor peaks
    uint64_t samples_used = 0;
};

/// Dense-sampling ground-truth oracle: FFT peak scan, golden-section
/// refinement, joint least squares, sequential subtraction. Deliberately uses
/// O(FT) samples; it is a correctness reference, not a sample-efficient
/// competitor.
inline GridOracleResult grid_oracle(const SignalSource& source, int k, GridOracleConfig cfg = {}) {
    const real T = source.duration();
    const real F = source.band_limit();
    const uint64_t before = source.samples_used();

    const int n = std::max(64, static_cast<int>(std::ceil(cfg.oversample * 2.0 * F * T)));
    std::vector<real> times(static_cast<std::size_t>(n));
    std::vector<cplx> samples(static_cast<std::size_t>(n));
    const real dt = T / n;
    for (int i = 0; i < n; ++i) {
        times[static_cast<std::size_t>(i)] = (i + 0.5) * dt;
        samples[static_cast<std::size_t>(i)] = source.sample(times[static_cast<std::size_t>(i)]);
    }

    // zero-padded FFT so the scan grid spacing 1/(nfft dt) <= 1/(grid_oversample T)
    const int nfft = next_pow2(static_cast<int>(std::ceil(cfg.grid_oversample * n)));
    auto score = [&](const std::vector<cplx>& resid, real f) {
        cplx acc{0, 0};
        for (int i = 0; i < n; ++i)
            acc += resid[static_cast<std::size_t>(i)] * unit_phase(-f * times[static_cast<std::size_t>(i)]);
        return std::abs(acc);
    };

    auto golden_refine = [&](const std::vector<cplx>& resid, real f0, real half_width) {
        real a = f0 - half_width, b = f0 + half_width;
        const real gr = 0.6180339887498949;
        real x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        real s1 = score(resid, x1), s2 = score(resid, x2);
        for (int it = 0; it < cfg.refine_iters; ++it) {
            if (s1 < s2) {
                a = x1; x1 = x2; s1 = s2;
                x2 = a + gr * (b - a); s2 = score(resid, x2);
            } else {
                b = x2; x2 = x1; s2 = s1;
                x1 = b - gr * (b - a); s1 = score(resid, x1);
            }
        }
        return std::clamp(0.5 * (a + b), -F, F);
    };

    GridOracleResult out;
    out.tones.eta = source.tones().eta;
    std::vector<real> found;
    std::vector<cplx> vs;
    std::vector<cplx> resid = samples;
    const real noise_floor_guess = 1e-13;
    const real grid_df = 1.0 / (static_cast<real>(nfft) * dt);

    auto rebuild_residual = [&](int skip) {
        std::vector<cplx> r = samples;
        for (std::size_t m = 0; m < found.size(); ++m) {
            if (static_cast<int>(m) == skip) continue;
            for (int i = 0; i < n; ++i)
                r[static_cast<std::size_t>(i)] -= vs[m] * unit_phase(found[m] * times[static_cast<std::size_t>(i)]);
        }
        return r;
    };

    for (int round = 0; round < k; ++round) {
        // FFT of the residual; bin j scores the frequency j / (nfft * dt)
        std::vector<cplx> spec(static_cast<std::size_t>(nfft), cplx{0, 0});
        for (int i = 0; i < n; ++i) spec[static_cast<std::size_t>(i)] = resid[static_cast<std::size_t>(i)];
        fft_pow2(spec, -1);
        // bin j corresponds to e^{-2 pi i j i_sample / nfft}; with t = (i+0.5) dt the
        // frequency is j / (nfft dt), alias-wrapped onto [-F, F)
        int best_j = 0;
        real best_mag = -1.0;
        for (int j = 0; j < nfft; ++j) {
            real f = grid_df * (j <= nfft / 2 ? j : j - nfft);
            if (f < -F || f > F) continue;
            real m = std::abs(spec[static_cast<std::size_t>(j)]);
            if (m > best_mag) { best_mag = m; best_j = j; }
        }
        real f0 = grid_df * (best_j <= nfft / 2 ? best_j : best_j - nfft);
        if (best_mag < noise_floor_guess * n) out.low_confidence = true;

        found.push_back(golden_refine(resid, f0, grid_df));

        // joint least squares over everything found so far, then rebuild residual
        try {
            vs = least_squares_magnitudes(found, times, samples);
        } catch (const ConfigError&) {
            out.low_confidence = true;
            found.pop_back();
            break;
        }
        resid = rebuild_residual(-1);
    }

    // polish: re-refine each frequency against the residual of the others,
    // which removes the bias the greedy passes inherit from unmodelled tones
    for (int pass = 0; pass < cfg.polish_passes; ++pass) {
        for (std::size_t m = 0; m < found.size(); ++m) {
            auto resid_m = rebuild_residual(static_cast<int>(m));
            found[m] = golden_refine(resid_m, found[m], 0.5 * grid_df);
            vs = least_squares_magnitudes(found, times, samples);
        }
    }

    for (std::size_t m = 0; m < found.size(); ++m) out.tones.tones.push_back({vs[m], found[m]});
    out.samples_used = source.samples_used() - before;
    return out;
}

/// Truncated Whittaker-Shannon interpolation from Nyquist-rate samples taken
/// inside [0, T]: x(t) ~ sum_i x(i/(2F)) sinc(2 F t - i) over the available i.
class NyquistReconstruction {
public:
    NyquistReconstruction(const SignalSource& source, real F) : F_(F) {
        const int count = static_cast<int>(std::floor(2.0 * F * source.duration())) + 1;
        samples_.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) samples_.push_back(source.sample(i / (2.0 * F)));
    }

    cplx evaluate(real t) const {
        cplx acc{0, 0};
        const real u = 2.0 * F_ * t;
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            real x = u - static_cast<real>(i);
            real w = (std::abs(x) < 1e-9) ? 1.0 : std::sin(kPi * x) / (kPi * x);
            acc += samples_[i] * w;
        }
        return acc;
    }

    std::size_t sample_count() const { return samples_.size(); }

private:
    real F_;
    std::vector<cplx> samples_;
};

inline cplx nyquist_reconstruct(const NyquistReconstruction& r, real t) { return r.evaluate(t); }

/// Dense discretization baseline: n uniform samples over [0, T], full DFT,
/// top-k bins at the grid frequencies j/T. Demonstrates the 1/(2T) rounding
/// floor of discretizing a continuous spectrum.
inline ToneSet dense_dft_baseline(const SignalSource& source, int n, int k) {
    const real T = source.duration();
    const real F = source.band_limit();
    if (n < static_cast<int>(std::ceil(2.0 * F * T)))
        throw ConfigError("dense_dft_baseline: need n >= 2 F T");
    const int nfft = next_pow2(n);
    std::vector<cplx> x(static_cast<std::size_t>(nfft), cplx{0, 0});
    const real dt = T / nfft;
    for (int i = 0; i < nfft; ++i) x[static_cast<std::size_t>(i)] = source.sample(i * dt);
    fft_pow2(x, -1);

    struct BinMag {
        int j;
        real mag;
    };
    std::vector<BinMag> mags;
    for (int j = 0; j < nfft; ++j) mags.push_back({j, std::abs(x[static_cast<std::size_t>(j)])});
    std::sort(mags.begin(), mags.end(), [](const BinMag& a, const BinMag& b) {
        if (a.mag != b.mag) return a.mag > b.mag;
        return a.j < b.j;
    });

    ToneSet out;
    for (int m = 0; m < k && m < static_cast<int>(mags.size()); ++m) {
        int j = mags[static_cast<std::size_t>(m)].j;
        int signed_j = j <= nfft / 2 ? j : j - nfft;
        // DFT bins sit at multiples of 1/(nfft dt) = 1/T
        out.tones.push_back({x[static_cast<std::size_t>(j)] / static_cast<real>(nfft),
                             static_cast<real>(signed_j) / T});
    }
    return out;
}

}  // namespace csfft
