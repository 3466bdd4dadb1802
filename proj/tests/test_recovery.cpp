#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace csfft;

namespace {

StageResult synthetic_stage(std::initializer_list<Tone> tones) {
    StageResult s;
    s.tones = tones;
    return s;
}

}  // namespace

TEST_CASE("one_stage recovers a lone noiseless tone", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    auto cfg = HashConfig::make(1, F, eta, 1e-6, 0.2, 16.0);
    auto w = build_window(cfg.B, 1, cfg.delta, cfg.alpha);
    ToneSet ts;
    ts.eta = eta;
    ts.tones = {{cplx(0.6, -0.8), -311.7}};
    SignalSource src(ts, NoiseModel::none(), 1.1 * min_feasible_duration(cfg, w), F, 4);
    StageOptions opt;
    opt.exclude_alpha_fraction = 1.0;   // drop the whole transition band, per the stage contract
    int good = 0, emitted = 0;
    Rng rng(51);
    for (int i = 0; i < 16; ++i) {
        Rng stage_rng = rng.fork();
        auto stage = one_stage(src, cfg, w, opt, stage_rng);
        if (stage.tones.empty()) continue;   // excluded by the offset check
        ++emitted;
        real best = 1e18;
        cplx v{};
        for (const auto& t : stage.tones)
            if (std::abs(t.f - ts.tones[0].f) < best) { best = std::abs(t.f - ts.tones[0].f); v = t.v; }
        real drift = kTwoPi * best * src.duration();
        if (std::abs(v - ts.tones[0].v) <= std::sqrt(cfg.delta) * 1.0 + drift + 1e-6) ++good;
    }
    REQUIRE(emitted >= 8);
    REQUIRE(good == emitted);
}

TEST_CASE("one_stage on the zero signal returns nothing", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    auto cfg = HashConfig::make(1, F, eta, 1e-6, 0.2, 16.0);
    auto w = build_window(cfg.B, 1, cfg.delta, cfg.alpha);
    ToneSet empty;
    SignalSource src(empty, NoiseModel::none(), 1.1 * min_feasible_duration(cfg, w), F, 4);
    Rng rng(53);
    auto stage = one_stage(src, cfg, w, StageOptions{}, rng);
    REQUIRE(stage.tones.empty());
}

TEST_CASE("one_stage matched error is delta-level for separated tones", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    const int k = 5;
    auto cfg = HashConfig::make(k, F, eta, 1e-6, 0.2, 16.0);
    auto w = build_window(cfg.B, k, cfg.delta, cfg.alpha);
    real T = 1.1 * min_feasible_duration(cfg, w);
    auto src = make_instance(k, F, eta, {1.0, 1.0}, NoiseModel::none(), T, 71);
    Rng rng(55);
    real total_power = src.tones().total_power();
    StageOptions opt;
    opt.exclude_alpha_fraction = 1.0;   // emitted tones then all sit in the flat passband
    int ok = 0;
    for (int trial = 0; trial < 5; ++trial) {
        Rng stage_rng = rng.fork();
        auto stage = one_stage(src, cfg, w, opt, stage_rng);
        ToneSet found;
        found.eta = eta;
        found.tones = stage.tones;
        auto m = match_tones(src.tones(), found, T);
        // matched time-domain error should be at the leakage level
        if (m.matched_dist2 <= 100.0 * cfg.delta * total_power) ++ok;
    }
    REQUIRE(ok >= 4);
}

TEST_CASE("run_stages accounting and sizes", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    auto cfg = HashConfig::make(2, F, eta, 1e-6, 0.2, 16.0);
    auto w = build_window(cfg.B, 2, cfg.delta, cfg.alpha);
    real T = 1.1 * min_feasible_duration(cfg, w);
    auto src = make_instance(2, F, eta, {1.0, 1.0}, NoiseModel::none(), T, 5);

    SECTION("one stage run equals one_stage with the same stream") {
        Rng a(99), b(99);
        auto stages = run_stages(src, cfg, w, StageOptions{}, 1, a);
        Rng fork_b = b.fork();
        auto direct = one_stage(src, cfg, w, StageOptions{}, fork_b);
        REQUIRE(stages.size() == 1);
        REQUIRE(stages[0].tones.size() == direct.tones.size());
        for (std::size_t i = 0; i < direct.tones.size(); ++i) {
            REQUIRE(stages[0].tones[i].f == direct.tones[i].f);
            REQUIRE(stages[0].tones[i].v == direct.tones[i].v);
        }
    }
    SECTION("stage outputs are bounded by B and samples add up") {
        uint64_t before = src.samples_used();
        Rng rng(101);
        auto stages = run_stages(src, cfg, w, StageOptions{}, 4, rng);
        uint64_t total = 0;
        for (const auto& s : stages) {
            REQUIRE(static_cast<int>(s.tones.size()) <= cfg.B);
            total += s.samples_used;
        }
        REQUIRE(src.samples_used() - before == total);
    }
}

TEST_CASE("merge_stages medians and the jump rule", "[recovery]") {
    MergeConfig mc;
    mc.stage_floor = 1;
    const real eta = 10.0;

    SECTION("identical stages merge to themselves") {
        std::vector<StageResult> stages;
        for (int i = 0; i < 5; ++i)
            stages.push_back(synthetic_stage({{cplx(1, 0), 100.0}, {cplx(0, 2), 150.0}}));
        auto merged = merge_stages(stages, mc, eta);
        REQUIRE(merged.k() == 2);
        REQUIRE(merged.tones[0].f == Catch::Approx(100.0));
        REQUIRE(merged.tones[0].v == cplx(1, 0));
        REQUIRE(merged.tones[1].f == Catch::Approx(150.0));
        REQUIRE(merged.tones[1].v == cplx(0, 2));
    }
    SECTION("one corrupted stage among seven is outvoted") {
        std::vector<StageResult> stages;
        for (int i = 0; i < 6; ++i)
            stages.push_back(synthetic_stage({{cplx(1, 0), 100.0 + 1e-4 * i}}));
        stages.push_back(synthetic_stage({{cplx(5, 5), 105.0}}));   // frequency off by eta/2
        auto merged = merge_stages(stages, mc, eta);
        REQUIRE(merged.k() == 1);
        REQUIRE(std::abs(merged.tones[0].f - 100.0) < 0.01);
        REQUIRE(std::abs(merged.tones[0].v - cplx(1, 0)) < 0.01);
    }
    SECTION("sparse disagreeing entries merge to nothing") {
        std::vector<StageResult> stages;
        for (int i = 0; i < 8; ++i)
            stages.push_back(synthetic_stage({{cplx(1, 0), 100.0 + 7.0 * i}}));   // > c*eta apart
        auto merged = merge_stages(stages, mc, eta);
        REQUIRE(merged.k() == 0);
    }
    SECTION("outputs keep at least (1 - 3c) eta separation") {
        // two clusters eta apart must both survive and stay separated
        std::vector<StageResult> stages;
        for (int i = 0; i < 5; ++i)
            stages.push_back(synthetic_stage({{cplx(1, 0), 100.0}, {cplx(1, 0), 100.0 + eta}}));
        auto merged = merge_stages(stages, mc, eta);
        REQUIRE(merged.k() == 2);
        REQUIRE(merged.min_separation() >= (1.0 - 3.0 * mc.c) * eta);
    }
}

TEST_CASE("intersect_tones implements the prune rule", "[recovery]") {
    ToneSet first;
    first.eta = 10.0;
    first.tones = {{cplx(1, 0), 100.0}, {cplx(1, 0), 200.0}, {cplx(9, 9), 300.0}};
    ToneSet second;
    second.tones = {{cplx(1, 0), 100.2}, {cplx(2, 0), 200.4}};

    SECTION("identical sets keep everything") {
        auto kept = intersect_tones(first, first, 1.0);
        REQUIRE(kept.k() == 3);
    }
    SECTION("a spurious first-run tone is removed") {
        auto kept = intersect_tones(first, second, 1.0);
        REQUIRE(kept.k() == 2);
        for (const auto& t : kept.tones) REQUIRE(t.f != 300.0);
    }
    SECTION("empty inputs give empty output") {
        ToneSet empty;
        REQUIRE(intersect_tones(empty, empty, 1.0).k() == 0);
        REQUIRE(intersect_tones(first, empty, 1.0).k() == 0);
    }
}

TEST_CASE("top_k selection", "[recovery]") {
    ToneSet tones;
    tones.tones = {{cplx(3, 0), 10.0}, {cplx(1, 0), 20.0}, {cplx(2, 0), 30.0}};

    SECTION("k >= size is the identity") {
        bool fewer = false;
        auto out = top_k(tones, 5, &fewer);
        REQUIRE(out.k() == 3);
        REQUIRE(fewer);
    }
    SECTION("keeps the largest magnitudes") {
        auto out = top_k(tones, 2, nullptr);
        REQUIRE(out.k() == 2);
        REQUIRE(std::abs(out.tones[0].v) == 3.0);
        REQUIRE(std::abs(out.tones[1].v) == 2.0);
    }
    SECTION("ties break toward the lower frequency") {
        ToneSet tie;
        tie.tones = {{cplx(1, 0), 50.0}, {cplx(1, 0), -20.0}, {cplx(1, 0), 30.0}};
        auto out = top_k(tie, 1, nullptr);
        REQUIRE(out.tones[0].f == -20.0);
    }
}

TEST_CASE("recover: piano instance, noiseless", "[recovery]") {
    RecoverOptions opt;
    opt.k = 5;
    int pass = 0;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        auto probe_cfg = HashConfig::make(5, 4200.0, 30.0, opt.delta, opt.alpha, opt.bins_per_tone);
        auto probe_w = build_window(probe_cfg.B, 5, opt.delta, opt.alpha);
        real T = 1.05 * min_feasible_duration(probe_cfg, probe_w);
        auto src = make_instance(5, 4200.0, 30.0, {1.0, 1.0}, NoiseModel::none(), T, seed);
        auto rep = recover(src, opt, seed * 31 + 1);
        bool ok = rep.matched == 5;
        for (const auto& p : rep.per_tone) {
            ok = ok && p.df <= 0.01 / T;
            ok = ok && p.dv <= 1e-2;
        }
        if (ok) ++pass;
        // structural invariants
        REQUIRE(rep.tones.k() == 5);
        REQUIRE(rep.tones.min_separation() >= (1.0 - 3.0 * opt.merge.c) * 30.0);
    }
    REQUIRE(pass == 3);
}

TEST_CASE("recover is deterministic given seed and config", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    RecoverOptions opt;
    opt.k = 2;
    opt.eq3_mc_points = 2000;
    auto cfg = HashConfig::make(2, F, eta, opt.delta, opt.alpha, opt.bins_per_tone);
    auto w = build_window(cfg.B, 2, opt.delta, opt.alpha);
    real T = 1.05 * min_feasible_duration(cfg, w);

    auto run = [&] {
        auto src = make_instance(2, F, eta, {1.0, 1.0}, NoiseModel::gaussian(1e-4), T, 77);
        return recover(src, opt, 1234);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.tones.k() == b.tones.k());
    for (int i = 0; i < a.tones.k(); ++i) {
        REQUIRE(a.tones.tones[static_cast<std::size_t>(i)].f == b.tones.tones[static_cast<std::size_t>(i)].f);
        REQUIRE(a.tones.tones[static_cast<std::size_t>(i)].v == b.tones.tones[static_cast<std::size_t>(i)].v);
    }
    REQUIRE(a.eq2 == b.eq2);
    REQUIRE(a.eq3 == b.eq3);
    REQUIRE(a.samples_used == b.samples_used);
}

TEST_CASE("recover rejects an infeasible duration with the computed minimum", "[recovery]") {
    auto src = make_instance(5, 4200.0, 30.0, {1.0, 1.0}, NoiseModel::none(), 1.0, 3);
    RecoverOptions opt;
    opt.k = 5;
    bool threw = false;
    try {
        recover(src, opt, 1);
    } catch (const DurationError& e) {
        threw = true;
        REQUIRE(e.minimum_duration > 1.0);
    }
    REQUIRE(threw);
}

TEST_CASE("recover sample accounting matches the source counter", "[recovery]") {
    const real F = 500.0, eta = 25.0;
    RecoverOptions opt;
    opt.k = 1;
    opt.eq3_mc_points = 1000;
    auto cfg = HashConfig::make(1, F, eta, opt.delta, opt.alpha, opt.bins_per_tone);
    auto w = build_window(cfg.B, 1, opt.delta, opt.alpha);
    real T = 1.05 * min_feasible_duration(cfg, w);
    auto src = make_instance(1, F, eta, {1.0, 1.0}, NoiseModel::none(), T, 11);
    uint64_t before = src.samples_used();
    auto rep = recover(src, opt, 7);
    REQUIRE(rep.samples_used == src.samples_used() - before);
    REQUIRE(rep.samples_run2 < rep.samples_used);
}
