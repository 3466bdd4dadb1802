#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/hashing.hpp"
#include "csfft/rng.hpp"
#include "csfft/signal_model.hpp"
#include "csfft/windows.hpp"

namespace csfft {

struct LocateParams {
    real C = 36.0;                // approximation factor; region scale s = 1/sqrt(C)
    int c_n = 2;                  // neighbour votes per candidate (one on each side)
    real c_R = 1.0;               // repetition multiplier
    int r_loc_min = 5;            // floor on per-round repetitions
    int t_min = 6;                // floor on region count
    real duration_fraction = 0.5; // beta cap: 2 beta sigma + sigma M <= T

    real s_main() const { return 1.0 / std::sqrt(C); }
};

/// Geometry of one t-ary search round shared by all bins.
struct SearchRound {
    real delta_l = 0.0;   // region-span width (Hz)
    int t = 4;            // region count
    real s = 0.5;         // scale parameter in (0, 1)
    real beta_hat = 0.0;  // base modulation step (multiples of sigma)
    int R_loc = 1;        // repetitions
    bool is_last = false;
};

/// Per-(bin, region) vote counters plus the logged candidate frequencies that
/// the last round's median draws from.
struct VoteTable {
    int bins = 0;
    int t = 0;
    std::vector<int> counts;                                  // bins x t
    std::vector<std::vector<std::pair<int, real>>> observed;  // per bin: (region, frequency)

    VoteTable(int bins_, int t_) : bins(bins_), t(t_), counts(static_cast<std::size_t>(bins_) * t_, 0),
                                   observed(static_cast<std::size_t>(bins_)) {}

    int count(int j, int q) const { return counts[static_cast<std::size_t>(j) * t + q]; }
    int& count(int j, int q) { return counts[static_cast<std::size_t>(j) * t + q]; }
};

/// Per-bin phase observation c_j = arg(u'_j / u_j) in cycles, where u and u'
/// are HashToBins measurements whose time offsets differ by exactly sigma*beta.
/// c_j ~ sigma*beta*f mod 1 for the tone owning bin j. Consumes 2M samples.
struct PhaseObservation {
    std::vector<real> c_cycles;
    std::vector<bool> valid;
    real sigma_beta = 0.0;
};

inline PhaseObservation observe_phase(const SignalSource& source, const HashDraw& draw, real gamma,
                                      real beta, const FlatWindow& w) {
    const real sigma = draw.sigma;
    BinMeasurement u1 = hash_to_bins(source, draw, sigma * gamma, w);
    BinMeasurement u2 = hash_to_bins(source, draw, sigma * (gamma + beta), w);
    PhaseObservation obs;
    obs.sigma_beta = sigma * beta;
    obs.c_cycles.resize(u1.u_hat.size());
    obs.valid.resize(u1.u_hat.size());
    for (std::size_t j = 0; j < u1.u_hat.size(); ++j) {
        bool ok = std::abs(u1.u_hat[j]) > 0.0 && std::abs(u2.u_hat[j]) > 0.0;
        obs.valid[j] = ok;
        obs.c_cycles[j] = ok ? arg_cycles(u2.u_hat[j] / u1.u_hat[j]) : 0.0;
    }
    return obs;
}

/// All frequencies in [l - dl/2 - w, l + dl/2 + w] consistent with the phase
/// observation, i.e. theta = (c + s)/(sigma beta) over integers s, with one
/// region width w of slack so noise cannot push the true tone off the list.
/// At most ceil(sigma*beta*dl) + 2 entries.
inline std::vector<real> candidate_frequencies(real c_cycles, real sigma_beta, real l, real delta_l,
                                               real band_limit, real slack = 0.0) {
    const real lo = l - 0.5 * delta_l - slack;
    const real hi = l + 0.5 * delta_l + slack;
    std::vector<real> out;
    const auto s_lo = static_cast<long long>(std::ceil(sigma_beta * lo - c_cycles - 1e-12));
    const auto s_hi = static_cast<long long>(std::floor(sigma_beta * hi - c_cycles + 1e-12));
    for (long long s = s_lo; s <= s_hi; ++s) {
        real theta = (c_cycles + static_cast<real>(s)) / sigma_beta;
        if (theta < lo || theta > hi) continue;
        out.push_back(std::min(std::max(theta, -band_limit), band_limit));
    }
    return out;
}

/// Votes one candidate: its region counter plus c_n/2 neighbours on each side,
/// clamped at the ends (no wrap-around). Logs the candidate for median use.
inline void vote(VoteTable& table, int bin, real candidate, real l, real delta_l, int c_n) {
    const real lo = l - 0.5 * delta_l;
    const real region_width = delta_l / table.t;
    int q = static_cast<int>(std::floor((candidate - lo) / region_width));
    if (q < -1 || q > table.t) return;   // wrap artifact, drop
    q = std::clamp(q, 0, table.t - 1);
    table.observed[static_cast<std::size_t>(bin)].push_back({q, candidate});
    const int r = c_n / 2;
    for (int d = -r; d <= r; ++d) {
        int qq = q + d;
        if (qq >= 0 && qq < table.t) ++table.count(bin, qq);
    }
}

/// Outcome of one LocateInner run for a single bin.
struct BinLocate {
    bool resolved = false;
    real value = 0.0;   // next interval centre, or the frequency when is_last
    real spread = 0.0;  // interquartile spread of the median-round candidates
};

/// One round of the t-ary search over all alive bins: R_loc random (gamma, beta)
/// phase observations, folded candidate voting, majority selection. Non-last
/// rounds report the winning region's centre (the caller shrinks delta_l by
/// t/(1+c_n)); the last round reports the median of the winning region's
/// logged candidates.
inline std::vector<BinLocate> locate_inner(const SignalSource& source, const HashDraw& draw,
                                           const FlatWindow& w, const SearchRound& round,
                                           const std::vector<real>& centers,
                                           const std::vector<bool>& alive, int c_n, Rng& rng) {
    const int B = w.B;
    VoteTable table(B, round.t);
    const real band = source.band_limit();
    const real region_slack = round.delta_l / round.t;

    for (int rep = 0; rep < round.R_loc; ++rep) {
        const real gamma = rng.uniform(0.5, 1.0);
        const real beta = rng.uniform(0.5 * round.beta_hat, round.beta_hat);
        PhaseObservation obs = observe_phase(source, draw, gamma, beta, w);
        for (int j = 0; j < B; ++j) {
            if (!alive[static_cast<std::size_t>(j)] || !obs.valid[static_cast<std::size_t>(j)]) continue;
            auto cands = candidate_frequencies(obs.c_cycles[static_cast<std::size_t>(j)], obs.sigma_beta,
                                               centers[static_cast<std::size_t>(j)], round.delta_l, band,
                                               region_slack);
            for (real cand : cands)
                vote(table, j, cand, centers[static_cast<std::size_t>(j)], round.delta_l, c_n);
        }
    }

    std::vector<BinLocate> out(static_cast<std::size_t>(B));
    const real majority = 0.5 * round.R_loc;
    for (int j = 0; j < B; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        // Rank by own count, breaking ties by the 3-region neighbourhood sum:
        // the true region's neighbours also carry full votes, while a
        // grid-aliased phantom's neighbours are only sporadically hit.
        int best_q = -1, best_count = 0, best_hood = 0;
        for (int q = 0; q < round.t; ++q) {
            int c = table.count(j, q);
            if (c == 0) continue;
            int hood = c + (q > 0 ? table.count(j, q - 1) : 0) +
                       (q + 1 < round.t ? table.count(j, q + 1) : 0);
            if (c > best_count || (c == best_count && hood > best_hood)) {
                best_count = c;
                best_hood = hood;
                best_q = q;
            }
        }
        if (best_q < 0 || static_cast<real>(best_count) <= majority) continue;   // unresolved

        auto& res = out[static_cast<std::size_t>(j)];
        if (round.is_last) {
            std::vector<real> in_region;
            const int r = c_n / 2;
            for (const auto& [q, f] : table.observed[static_cast<std::size_t>(j)])
                if (std::abs(q - best_q) <= r) in_region.push_back(f);
            if (in_region.empty()) continue;
            std::sort(in_region.begin(), in_region.end());
            std::size_t n = in_region.size();
            res.value = (n % 2 == 1) ? in_region[n / 2]
                                     : 0.5 * (in_region[n / 2 - 1] + in_region[n / 2]);
            res.spread = in_region[(3 * n) / 4] - in_region[n / 4];
        } else {
            const real lo = centers[static_cast<std::size_t>(j)] - 0.5 * round.delta_l;
            res.value = lo + (best_q + 0.5) * round.delta_l / round.t;
        }
        res.resolved = true;
    }
    return out;
}

/// Diagnostic trace hook: called once per (round, bin) with the narrowing state.
struct LocateTraceEntry {
    int round = 0;
    int bin = 0;
    real delta_l = 0.0;
    real beta_hat = 0.0;
    bool resolved = false;
    real value = 0.0;
};
using LocateTraceSink = std::function<void(const LocateTraceEntry&)>;

struct LocateSchedule {
    int t = 0;
    int R_loc = 0;
    int geometric_rounds = 0;
    real final_delta_l = 0.0;   // interval width handed to the median round
    real beta_cap = 0.0;        // largest beta_hat (multiples of sigma)
};

/// Smallest duration for which the round schedule fits with comfortable
/// margin for the worst-case sigma draw.
inline real min_feasible_duration(const HashConfig& cfg, const FlatWindow& w) {
    const real sigma_max = 2.0 / (cfg.B * cfg.eta);
    return 4.0 * sigma_max * (w.M + 2);
}

/// The full t-ary frequency search: geometric narrowing rounds followed by one
/// duration-limited median round. Returns O(k) frequencies with pairwise
/// separation >= eta/2.
inline std::vector<real> locate_k_signal(const SignalSource& source, const HashConfig& cfg,
                                         const HashDraw& draw, const LocateParams& params,
                                         const FlatWindow& w, Rng& rng,
                                         LocateSchedule* schedule_out = nullptr,
                                         const LocateTraceSink& trace = nullptr) {
    const real T = source.duration();
    const real F = cfg.F;
    const real sigma = draw.sigma;
    const real s = params.s_main();
    const real t_min_fold = std::ceil(4.0 / s) + 1.0;
    const int t = std::max({params.t_min, static_cast<int>(t_min_fold),
                            static_cast<int>(std::ceil(std::log(std::max(F * T, real(8.0)))))});
    const real t_prime = static_cast<real>(t) / (params.c_n + 1);
    const int R_loc = std::max(params.r_loc_min,
                               static_cast<int>(std::ceil(params.c_R * std::log(t * params.C) /
                                                          std::log(params.C))));

    const real beta_cap = params.duration_fraction * (T - sigma * (w.M + 2)) / sigma;
    if (beta_cap < 4.0)
        throw DurationError("locate_k_signal: duration too short for the round schedule",
                            min_feasible_duration(cfg, w));

    const real delta_l_target = s * t / (2.0 * sigma * beta_cap);
    int n_geo = 0;
    if (2.0 * F > delta_l_target)
        n_geo = std::min(60, static_cast<int>(std::ceil(std::log(2.0 * F / delta_l_target) /
                                                        std::log(t_prime))));

    std::vector<real> centers(static_cast<std::size_t>(cfg.B), 0.0);
    std::vector<bool> alive(static_cast<std::size_t>(cfg.B), true);
    real delta_l = 2.0 * F;

    std::vector<real> spreads(static_cast<std::size_t>(cfg.B), 0.0);
    auto run_round = [&](const SearchRound& round, int round_index) {
        auto results = locate_inner(source, draw, w, round, centers, alive, params.c_n, rng);
        for (int j = 0; j < cfg.B; ++j) {
            if (!alive[static_cast<std::size_t>(j)]) continue;
            const auto& r = results[static_cast<std::size_t>(j)];
            if (trace)
                trace({round_index, j, round.delta_l, round.beta_hat, r.resolved, r.value});
            if (!r.resolved) {
                alive[static_cast<std::size_t>(j)] = false;
            } else {
                centers[static_cast<std::size_t>(j)] = r.value;
                spreads[static_cast<std::size_t>(j)] = r.spread;
            }
        }
    };

    for (int i = 0; i < n_geo; ++i) {
        SearchRound round;
        round.delta_l = delta_l;
        round.t = t;
        round.s = s;
        round.beta_hat = std::min(s * t / (2.0 * sigma * delta_l), beta_cap);
        round.R_loc = R_loc;
        round.is_last = false;
        run_round(round, i);
        delta_l = delta_l * (params.c_n + 1) / t;
    }

    SearchRound last;
    last.delta_l = delta_l;
    last.t = t;
    last.s = s;
    last.beta_hat = std::min(s * t / (2.0 * sigma * delta_l), beta_cap);
    last.R_loc = R_loc;
    last.is_last = true;
    run_round(last, n_geo);

    if (schedule_out) {
        schedule_out->t = t;
        schedule_out->R_loc = R_loc;
        schedule_out->geometric_rounds = n_geo;
        schedule_out->final_delta_l = delta_l;
        schedule_out->beta_cap = last.beta_hat;
    }

    // Leakage can resolve faint copies of a tone in other bins; their median
    // candidates scatter far more than the owning bin's, so each eta/2 cluster
    // keeps its tightest member.
    struct Cand {
        real f;
        real spread;
    };
    std::vector<Cand> found;
    for (int j = 0; j < cfg.B; ++j)
        if (alive[static_cast<std::size_t>(j)])
            found.push_back({wrap_band(centers[static_cast<std::size_t>(j)], F),
                             spreads[static_cast<std::size_t>(j)]});
    std::sort(found.begin(), found.end(), [](const Cand& a, const Cand& b) { return a.f < b.f; });

    std::vector<real> dedup;
    std::size_t i = 0;
    while (i < found.size()) {
        std::size_t j = i;
        Cand best = found[i];
        while (j + 1 < found.size() && found[j + 1].f - found[j].f < 0.5 * cfg.eta) {
            ++j;
            if (found[j].spread < best.spread) best = found[j];
        }
        dedup.push_back(best.f);
        i = j + 1;
    }
    return dedup;
}

}  // namespace csfft
