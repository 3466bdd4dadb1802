#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "csfft/common.hpp"
#include "csfft/rng.hpp"
#include "csfft/signal_model.hpp"

namespace csfft {

/// phi(df, T) = (1/T) int_0^T e^{2 pi i df t} dt = (e^{2 pi i df T} - 1) / (2 pi i df T).
/// Series evaluation near df*T = 0 to avoid cancellation.
inline cplx phase_average(real df, real T) {
    const cplx z = cplx(0.0, kTwoPi * df * T);
    if (std::abs(df * T) < 1e-4) {
        // phi = sum_{n>=0} z^n / (n+1)!
        cplx term{1.0, 0.0}, acc{1.0, 0.0};
        for (int n = 1; n <= 6; ++n) {
            term *= z / static_cast<real>(n + 1);
            acc += term;
        }
        return acc;
    }
    return (std::exp(z) - 1.0) / z;
}

/// dist((v,f),(v',f'))^2 = (1/T) int_0^T |v e^{2 pi i f t} - v' e^{2 pi i f' t}|^2 dt
/// = |v|^2 + |v'|^2 - 2 Re( v conj(v') phi(f - f', T) ).
inline real tone_dist2(const Tone& a, const Tone& b, real T) {
    if (T <= 0.0) throw ConfigError("tone_dist2: T must be positive");
    real d = std::norm(a.v) + std::norm(b.v) -
             2.0 * std::real(a.v * std::conj(b.v) * phase_average(a.f - b.f, T));
    return std::max(d, 0.0);
}

/// dist2 together with the comparable closed quantity
/// Q = (|v|^2 + |v'|^2) min(1, T^2 (f-f')^2) + |v - v'|^2, bracketed by the
/// empirical sandwich constant: dist2 in [lower, upper].
struct DistBounds {
    real dist2 = 0.0;
    real lower = 0.0;
    real upper = 0.0;
};

inline DistBounds dist_bounds_check(const Tone& a, const Tone& b, real T,
                                    real margin = 8.0 * kPi * kPi / 3.0) {
    DistBounds out;
    out.dist2 = tone_dist2(a, b, T);
    real df = a.f - b.f;
    real q = (std::norm(a.v) + std::norm(b.v)) * std::min(1.0, T * T * df * df) +
             std::norm(a.v - b.v);
    out.lower = q / margin;
    out.upper = q * margin;
    return out;
}

struct ToneError {
    real df = 0.0;      // |f' - f|
    real dv = 0.0;      // |v' - v|
    real dist2 = 0.0;   // time-domain squared distance
};

struct Matching {
    struct Pair {
        int truth_index;
        int found_index;
        ToneError error;
    };
    std::vector<Pair> pairs;
    std::vector<int> unmatched_truth;
    std::vector<int> unmatched_found;
    real matched_dist2 = 0.0;
    real unmatched_truth_power = 0.0;   // sum |v|^2 over missed true tones
    real unmatched_found_power = 0.0;   // sum |v'|^2 over spurious found tones

    real total() const { return matched_dist2 + unmatched_truth_power + unmatched_found_power; }
};

/// Greedy nearest-frequency pairing. Pairs are admitted in order of ascending
/// frequency gap and only within eta/2; both sides are Omega(eta)-separated so
/// the pairing is unambiguous. Unmatched tones are charged their full power.
inline Matching match_tones(const ToneSet& truth, const ToneSet& found, real T,
                            std::optional<real> max_gap = std::nullopt) {
    const real gap_cap = max_gap.value_or(truth.eta > 0.0 ? 0.5 * truth.eta
                                                          : std::numeric_limits<real>::infinity());
    struct Cand {
        real gap;
        int ti, fi;
    };
    std::vector<Cand> cands;
    for (int ti = 0; ti < truth.k(); ++ti)
        for (int fi = 0; fi < found.k(); ++fi) {
            real gap = std::abs(truth.tones[ti].f - found.tones[fi].f);
            if (gap <= gap_cap) cands.push_back({gap, ti, fi});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.gap != b.gap) return a.gap < b.gap;
        if (a.ti != b.ti) return a.ti < b.ti;
        return a.fi < b.fi;
    });

    Matching m;
    std::vector<bool> t_used(truth.k(), false), f_used(found.k(), false);
    for (const auto& c : cands) {
        if (t_used[c.ti] || f_used[c.fi]) continue;
        t_used[c.ti] = f_used[c.fi] = true;
        const Tone& tt = truth.tones[c.ti];
        const Tone& ft = found.tones[c.fi];
        ToneError e;
        e.df = std::abs(tt.f - ft.f);
        e.dv = std::abs(tt.v - ft.v);
        e.dist2 = tone_dist2(tt, ft, T);
        m.matched_dist2 += e.dist2;
        m.pairs.push_back({c.ti, c.fi, e});
    }
    for (int ti = 0; ti < truth.k(); ++ti)
        if (!t_used[ti]) {
            m.unmatched_truth.push_back(ti);
            m.unmatched_truth_power += std::norm(truth.tones[ti].v);
        }
    for (int fi = 0; fi < found.k(); ++fi)
        if (!f_used[fi]) {
            m.unmatched_found.push_back(fi);
            m.unmatched_found_power += std::norm(found.tones[fi].v);
        }
    return m;
}

/// Total tone-wise error: matched time-domain distances plus the power of
/// tones present on only one side.
inline real eq2_total(const ToneSet& truth, const ToneSet& found, real T) {
    return match_tones(truth, found, T).total();
}

/// (1/T) int_0^T |x'(t) - x*(t)|^2 dt for two tone sets, expanded in closed
/// form over all pairwise phase averages.
inline real tone_sets_dist2(const ToneSet& x_prime, const ToneSet& x_star, real T) {
    std::vector<Tone> diff;
    diff.reserve(x_prime.tones.size() + x_star.tones.size());
    for (const auto& t : x_prime.tones) diff.push_back(t);
    for (const auto& t : x_star.tones) diff.push_back({-t.v, t.f});
    real acc = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
        acc += std::norm(diff[i].v);
        for (std::size_t j = i + 1; j < diff.size(); ++j)
            acc += 2.0 * std::real(diff[i].v * std::conj(diff[j].v) *
                                   phase_average(diff[i].f - diff[j].f, T));
    }
    return std::max(acc, 0.0);
}

struct Eq3Result {
    real value = 0.0;
    real std_error = 0.0;   // zero when computed in closed form
    bool monte_carlo = false;
};

/// (1/T) int_0^T |x'(t) - x(t)|^2 dt. Closed form when the noise is absent or
/// itself a tone expansion (decay handled by quadrature); Monte Carlo with a
/// reported standard error otherwise.
inline Eq3Result eq3_error(const ToneSet& found, const SignalSource& source, real T,
                           int mc_points = 100000, uint64_t mc_seed = 0x517cc1b727220a95ULL) {
    Eq3Result r;
    switch (source.noise().kind) {
        case NoiseModel::Kind::none:
            r.value = tone_sets_dist2(found, source.tones(), T);
            return r;
        case NoiseModel::Kind::decay: {
            auto integrand = [&](real t) {
                return std::norm(evaluate_pure(found, t) - source.probe(t));
            };
            r.value = integrate(integrand, 0.0, T) / T;
            return r;
        }
        default: {
            r.monte_carlo = true;
            Rng rng(mc_seed);
            real sum = 0.0, sum2 = 0.0;
            for (int i = 0; i < mc_points; ++i) {
                real t = rng.uniform(0.0, T);
                real v = std::norm(evaluate_pure(found, t) - source.probe(t));
                sum += v;
                sum2 += v * v;
            }
            real mean = sum / mc_points;
            real var = std::max(sum2 / mc_points - mean * mean, 0.0);
            r.value = mean;
            r.std_error = std::sqrt(var / mc_points);
            return r;
        }
    }
}

/// |(1/T) int_0^T a_i(t) conj(a_j(t)) dt| for residual pairs
/// a(t) = v e^{2 pi i f t} - v' e^{2 pi i f' t}, in closed form.
inline real cross_term(const Tone& ai_true, const Tone& ai_found, const Tone& aj_true,
                       const Tone& aj_found, real T) {
    auto inner = [&](const Tone& p, const Tone& q) {
        return p.v * std::conj(q.v) * phase_average(p.f - q.f, T);
    };
    cplx acc = inner(ai_true, aj_true) - inner(ai_true, aj_found) - inner(ai_found, aj_true) +
               inner(ai_found, aj_found);
    return std::abs(acc);
}

}  // namespace csfft
