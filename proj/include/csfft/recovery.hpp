#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/hashing.hpp"
#include "csfft/locate.hpp"
#include "csfft/metrics.hpp"
#include "csfft/rng.hpp"
#include "csfft/signal_model.hpp"
#include "csfft/windows.hpp"

namespace csfft {

/// Output of one (sigma, b) stage: located frequencies with demodulated
/// magnitudes, at most B entries.
struct StageResult {
    std::vector<Tone> tones;
    HashDraw draw;
    uint64_t samples_used = 0;
    LocateSchedule schedule;
};

struct MergeConfig {
    real c = 0.1;          // clustering window as a fraction of eta
    real b_frac = 0.6;     // fraction of stages that must agree
    int stage_floor = 10;  // lower bound on the stage count
    real c_s = 2.0;        // stages = max(stage_floor, ceil(c_s log2 k))

    int stages(int k) const {
        real lg = std::log2(static_cast<real>(std::max(k, 2)));
        return std::max(stage_floor, static_cast<int>(std::ceil(c_s * lg)));
    }
};

struct StageOptions {
    LocateParams locate;
    real estimate_offset_fraction = 0.25;   // tau ~ U[0, frac*(T - sigma M)]
    real exclude_alpha_fraction = 0.125;    // drop tones with |o| >= (1 - alpha*frac) pi/B
};

/// One stage: draw (sigma, b), locate, then one fresh measurement at a random
/// time offset to estimate magnitudes. Tones whose offset lands hard against
/// the bin edge are dropped; milder transition-band attenuation is left for
/// the stage medians to absorb.
inline StageResult one_stage(const SignalSource& source, const HashConfig& cfg,
                             const FlatWindow& w, const StageOptions& opt, Rng& rng) {
    StageResult out;
    const uint64_t before = source.samples_used();
    out.draw = draw_hash(cfg, rng);
    std::vector<real> located =
        locate_k_signal(source, cfg, out.draw, opt.locate, w, rng, &out.schedule);

    const real span = out.draw.sigma * w.M;
    const real tau_max = std::max(0.0, (source.duration() - span) * opt.estimate_offset_fraction);
    const real tau = rng.uniform(0.0, tau_max);
    BinMeasurement m = hash_to_bins(source, out.draw, tau, w);

    const real edge = (1.0 - cfg.alpha * opt.exclude_alpha_fraction) * kPi / cfg.B;
    for (real f : located) {
        if (std::abs(offset_angle(f, out.draw, cfg.B)) >= edge) continue;
        out.tones.push_back({m.estimate(f, cfg.B), f});
    }
    out.samples_used = source.samples_used() - before;
    return out;
}

inline std::vector<StageResult> run_stages(const SignalSource& source, const HashConfig& cfg,
                                           const FlatWindow& w, const StageOptions& opt,
                                           int stages, Rng& rng) {
    std::vector<StageResult> out;
    out.reserve(static_cast<std::size_t>(stages));
    for (int i = 0; i < stages; ++i) {
        Rng stage_rng = rng.fork();
        out.push_back(one_stage(source, cfg, w, opt, stage_rng));
    }
    return out;
}

/// Pools all stage tones sorted by frequency and scans: whenever a window
/// [f, f + c eta] holds at least b_frac of the stages, emits the
/// coordinate-wise median (Re v, Im v, f) over [f - c eta, f + 2 c eta] and
/// jumps past f + 2 c eta + eta / 2.
inline ToneSet merge_stages(const std::vector<StageResult>& stages, const MergeConfig& mc,
                            real eta) {
    struct Entry {
        real f;
        cplx v;
    };
    std::vector<Entry> pool;
    for (const auto& s : stages)
        for (const auto& t : s.tones) pool.push_back({t.f, t.v});
    std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) { return a.f < b.f; });

    const int R = static_cast<int>(stages.size());
    const int threshold = std::max(1, static_cast<int>(std::ceil(mc.b_frac * R - 1e-9)));
    const real cw = mc.c * eta;

    auto median_of = [](std::vector<real>& xs) {
        std::sort(xs.begin(), xs.end());
        std::size_t n = xs.size();
        return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    };
    auto first_at_or_above = [&](real f) {
        return std::lower_bound(pool.begin(), pool.end(), f,
                                [](const Entry& e, real x) { return e.f < x; });
    };

    ToneSet out;
    out.eta = eta;
    auto it = pool.begin();
    while (it != pool.end()) {
        const real f0 = it->f;
        auto hi = first_at_or_above(f0 + cw + 1e-12);
        if (hi - it >= threshold) {
            auto lo_med = first_at_or_above(f0 - cw);
            auto hi_med = first_at_or_above(f0 + 2.0 * cw + 1e-12);
            std::vector<real> fs, res, ims;
            for (auto p = lo_med; p != hi_med; ++p) {
                fs.push_back(p->f);
                res.push_back(p->v.real());
                ims.push_back(p->v.imag());
            }
            out.tones.push_back({cplx(median_of(res), median_of(ims)), median_of(fs)});
            it = first_at_or_above(f0 + 2.0 * cw + 0.5 * eta);
        } else {
            ++it;
        }
    }
    if (out.k() >= 2) out.eta = out.min_separation();
    return out;
}

struct PruneOptions {
    int sparsity_factor = 2;        // second run pretends sparsity is factor*k
    real bins_per_tone = 16.0;      // first-run bins per tone
    MergeConfig merge;
    StageOptions stage;
};

/// Keeps the tones of `first` whose frequency is within `tol` of some tone of
/// `second`.
inline ToneSet intersect_tones(const ToneSet& first, const ToneSet& second, real tol) {
    ToneSet kept;
    kept.eta = first.eta;
    for (const auto& t : first.tones) {
        bool corroborated = false;
        for (const auto& u : second.tones)
            if (std::abs(t.f - u.f) <= tol) { corroborated = true; break; }
        if (corroborated) kept.tones.push_back(t);
    }
    if (kept.k() >= 2) kept.eta = kept.min_separation();
    return kept;
}

/// Runs the stage pipeline twice with independent randomness (the second at
/// sparsity factor*k) and keeps the first run's tones that are corroborated by
/// a second-run frequency within c*eta.
inline ToneSet prune_twice(const SignalSource& source, const HashConfig& cfg, const FlatWindow& w,
                           const PruneOptions& opt, Rng& rng, uint64_t* samples_run2 = nullptr) {
    const int R1 = opt.merge.stages(cfg.k);
    ToneSet first = merge_stages(run_stages(source, cfg, w, opt.stage, R1, rng), opt.merge, cfg.eta);

    const int k2 = opt.sparsity_factor * cfg.k;
    HashConfig cfg2 = HashConfig::make(k2, cfg.F, cfg.eta, cfg.delta, cfg.alpha,
                                       std::max(2.0, opt.bins_per_tone / opt.sparsity_factor));
    FlatWindow w2 = build_window(cfg2.B, k2, cfg2.delta, cfg2.alpha);
    const uint64_t before2 = source.samples_used();
    const int R2 = opt.merge.stages(k2);
    ToneSet second =
        merge_stages(run_stages(source, cfg2, w2, opt.stage, R2, rng), opt.merge, 0.5 * cfg.eta);
    if (samples_run2) *samples_run2 = source.samples_used() - before2;

    return intersect_tones(first, second, opt.merge.c * cfg.eta);
}

/// Keeps the k largest-magnitude tones, ties broken toward lower frequency.
inline ToneSet top_k(const ToneSet& tones, int k, bool* fewer = nullptr) {
    auto sorted = tones.tones;
    std::sort(sorted.begin(), sorted.end(), [](const Tone& a, const Tone& b) {
        real ma = std::abs(a.v), mb = std::abs(b.v);
        if (ma != mb) return ma > mb;
        return a.f < b.f;
    });
    if (fewer) *fewer = static_cast<int>(sorted.size()) < k;
    if (static_cast<int>(sorted.size()) > k) sorted.resize(static_cast<std::size_t>(k));
    ToneSet out;
    out.tones = std::move(sorted);
    out.eta = out.k() >= 2 ? out.min_separation() : tones.eta;
    return out;
}

struct RecoverOptions {
    int k = 1;
    real delta = 1e-6;
    real alpha = 0.2;
    real bins_per_tone = 16.0;
    MergeConfig merge;
    StageOptions stage;
    int prune_sparsity_factor = 2;
    int eq3_mc_points = 100000;
};

/// Feasibility minimum over both prune runs' schedules for these options.
inline real recommended_duration(int k, real F, real eta, const RecoverOptions& opt) {
    HashConfig cfg = HashConfig::make(k, F, eta, opt.delta, opt.alpha, opt.bins_per_tone);
    FlatWindow w = build_window(cfg.B, cfg.k, cfg.delta, cfg.alpha);
    real t_min = min_feasible_duration(cfg, w);
    HashConfig cfg2 = HashConfig::make(opt.prune_sparsity_factor * k, F, eta, opt.delta, opt.alpha,
                                       std::max(2.0, opt.bins_per_tone / opt.prune_sparsity_factor));
    FlatWindow w2 = build_window(cfg2.B, cfg2.k, cfg2.delta, cfg2.alpha);
    return std::max(t_min, min_feasible_duration(cfg2, w2));
}

struct RecoveryReport {
    ToneSet tones;
    struct PerTone {
        real f_true = 0.0;
        real v_true_abs = 0.0;
        real df = 0.0;
        real dv = 0.0;
        real dist2 = 0.0;
        real f_found = 0.0;
        cplx v_found;
    };
    std::vector<PerTone> per_tone;   // one row per matched pair
    int matched = 0;
    real eq2 = 0.0;
    real eq3 = 0.0;
    real eq3_std_error = 0.0;
    real noise_level2 = 0.0;
    uint64_t samples_used = 0;
    uint64_t samples_run2 = 0;
    double wall_ms = 0.0;
    uint64_t seed = 0;
    bool fewer_than_k = false;
    real min_feasible_T = 0.0;
};

/// The main entry point: prune-twice, top-k, metrics against the source's
/// ground truth.
inline RecoveryReport recover(const SignalSource& source, const RecoverOptions& opt,
                              uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    if (opt.k < 1) throw ConfigError("recover: k must be >= 1");
    const real T = source.duration();
    const real F = source.band_limit();
    const real eta = source.tones().eta;
    if (eta <= 0.0) throw ConfigError("recover: instance eta must be positive");

    HashConfig cfg =
        HashConfig::make(opt.k, F, eta, opt.delta, opt.alpha, opt.bins_per_tone);
    FlatWindow w = build_window(cfg.B, cfg.k, cfg.delta, cfg.alpha);

    RecoveryReport report;
    report.seed = seed;
    report.min_feasible_T = min_feasible_duration(cfg, w);
    {
        // the prune run doubles sparsity; its window is wider, so check it too
        HashConfig cfg2 = HashConfig::make(opt.prune_sparsity_factor * opt.k, F, eta, opt.delta,
                                           opt.alpha,
                                           std::max(2.0, opt.bins_per_tone / opt.prune_sparsity_factor));
        FlatWindow w2 = build_window(cfg2.B, cfg2.k, cfg2.delta, cfg2.alpha);
        report.min_feasible_T = std::max(report.min_feasible_T, min_feasible_duration(cfg2, w2));
    }
    if (T < report.min_feasible_T)
        throw DurationError("recover: duration below the feasible schedule", report.min_feasible_T);

    const uint64_t samples_before = source.samples_used();
    Rng rng(seed);
    PruneOptions popt;
    popt.sparsity_factor = opt.prune_sparsity_factor;
    popt.bins_per_tone = opt.bins_per_tone;
    popt.merge = opt.merge;
    popt.stage = opt.stage;
    ToneSet pruned = prune_twice(source, cfg, w, popt, rng, &report.samples_run2);
    report.tones = top_k(pruned, opt.k, &report.fewer_than_k);
    report.samples_used = source.samples_used() - samples_before;

    Matching m = match_tones(source.tones(), report.tones, T);
    report.matched = static_cast<int>(m.pairs.size());
    report.eq2 = m.total();
    for (const auto& p : m.pairs) {
        const Tone& tt = source.tones().tones[static_cast<std::size_t>(p.truth_index)];
        const Tone& ft = report.tones.tones[static_cast<std::size_t>(p.found_index)];
        report.per_tone.push_back({tt.f, std::abs(tt.v), p.error.df, p.error.dv, p.error.dist2,
                                   ft.f, ft.v});
    }
    Eq3Result e3 = eq3_error(report.tones, source, T, opt.eq3_mc_points, seed ^ 0xeb3f1c24a8d92b6cULL);
    report.eq3 = e3.value;
    report.eq3_std_error = e3.std_error;
    report.noise_level2 = noise_level(source, opt.delta);
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace csfft
