#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace csfft;
using csfft::testing::fit_slope;

TEST_CASE("least_squares_magnitudes solves exact systems", "[baselines]") {
    Rng rng(3);
    std::vector<real> freqs = {10.0, 55.0, -32.0};
    std::vector<cplx> truth = {cplx(1, 0.5), cplx(-0.3, 1.1), cplx(2, -2)};
    std::vector<real> times;
    std::vector<cplx> samples;
    for (int i = 0; i < 64; ++i) {
        real t = i / 64.0;
        times.push_back(t);
        cplx acc{0, 0};
        for (std::size_t m = 0; m < freqs.size(); ++m) acc += truth[m] * unit_phase(freqs[m] * t);
        samples.push_back(acc);
    }
    auto v = least_squares_magnitudes(freqs, times, samples);
    for (std::size_t m = 0; m < freqs.size(); ++m) REQUIRE(std::abs(v[m] - truth[m]) < 1e-9);
}

TEST_CASE("least_squares k=1 reduces to the projection formula", "[baselines]") {
    std::vector<real> times;
    std::vector<cplx> samples;
    Rng rng(5);
    real f = 17.5;
    cplx vt(0.7, -0.2);
    cplx num{0, 0};
    for (int i = 0; i < 32; ++i) {
        real t = rng.uniform(0.0, 1.0);
        times.push_back(t);
        cplx s = vt * unit_phase(f * t) + cplx(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
        samples.push_back(s);
        num += std::conj(unit_phase(f * t)) * s;
    }
    auto v = least_squares_magnitudes({f}, times, samples);
    REQUIRE(std::abs(v[0] - num / 32.0) < 1e-9);   // projection onto the unit atom
}

TEST_CASE("least_squares against a quadrature-built Gram oracle under noise", "[baselines]") {
    // continuous-limit oracle: v = G^{-1} r with G_ab = phi(f_a - f_b, T)
    std::vector<real> freqs = {40.0, 47.0};
    std::vector<cplx> truth = {cplx(1, 0), cplx(0, 1)};
    const real T = 1.0;
    const int n = 4000;
    std::vector<real> times;
    std::vector<cplx> samples;
    Rng rng(9);
    for (int i = 0; i < n; ++i) {
        real t = T * (i + 0.5) / n;
        times.push_back(t);
        cplx acc{0, 0};
        for (std::size_t m = 0; m < freqs.size(); ++m) acc += truth[m] * unit_phase(freqs[m] * t);
        samples.push_back(acc + keyed_complex_gauss(12345, t, 1e-4));
    }
    auto v = least_squares_magnitudes(freqs, times, samples);
    // 2x2 continuous Gram solve
    cplx g01 = phase_average(freqs[0] - freqs[1], T);
    cplx r0{0, 0}, r1{0, 0};
    for (int i = 0; i < n; ++i) {
        r0 += std::conj(unit_phase(freqs[0] * times[static_cast<std::size_t>(i)])) * samples[static_cast<std::size_t>(i)];
        r1 += std::conj(unit_phase(freqs[1] * times[static_cast<std::size_t>(i)])) * samples[static_cast<std::size_t>(i)];
    }
    r0 /= n;
    r1 /= n;
    cplx det = 1.0 - g01 * std::conj(g01);
    cplx w0 = (r0 - g01 * r1) / det;
    cplx w1 = (r1 - std::conj(g01) * r0) / det;
    REQUIRE(std::abs(v[0] - w0) < 1e-3);
    REQUIRE(std::abs(v[1] - w1) < 1e-3);
}

TEST_CASE("least_squares rejects near-duplicate frequencies by name", "[baselines]") {
    std::vector<real> times = {0.0, 0.25, 0.5, 0.75};
    std::vector<cplx> samples = {cplx(1, 0), cplx(1, 0), cplx(1, 0), cplx(1, 0)};
    try {
        least_squares_magnitudes({10.0, 10.0 + 1e-12}, times, samples);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("10") != std::string::npos);
    }
}

TEST_CASE("grid_oracle finds a lone noiseless tone to high precision", "[baselines]") {
    ToneSet ts;
    ts.eta = 10.0;
    ts.tones = {{cplx(0.8, -0.6), 41.237}};
    SignalSource src(ts, NoiseModel::none(), 2.0, 100.0, 1);
    auto res = grid_oracle(src, 1);
    REQUIRE(res.tones.k() == 1);
    REQUIRE(std::abs(res.tones.tones[0].f - 41.237) < 1e-3 / 2.0);   // grid_step/1e3 scale
    REQUIRE(std::abs(res.tones.tones[0].v - ts.tones[0].v) < 1e-6);
    REQUIRE(res.samples_used > 0);
}

TEST_CASE("grid_oracle recovers the piano chord to 1e-6 relative", "[baselines]") {
    // desk-scale piano stand-in: full F=4200 with a short T keeps FT manageable
    auto src = make_instance(5, 4200.0, 30.0, {0.5, 1.5}, NoiseModel::none(), 0.5, 321);
    auto res = grid_oracle(src, 5);
    REQUIRE(res.tones.k() == 5);
    auto m = match_tones(src.tones(), res.tones, src.duration());
    REQUIRE(m.pairs.size() == 5);
    for (const auto& p : m.pairs) {
        const Tone& t = src.tones().tones[static_cast<std::size_t>(p.truth_index)];
        REQUIRE(p.error.df <= 1e-6 * std::max(std::abs(t.f), 1.0 / src.duration()));
        REQUIRE(p.error.dv <= 1e-4 * std::abs(t.v));
    }
}

TEST_CASE("grid_oracle flags the zero signal as low confidence", "[baselines]") {
    ToneSet empty;
    SignalSource src(empty, NoiseModel::gaussian(1e-8), 1.0, 50.0, 5);
    auto res = grid_oracle(src, 2);
    // magnitudes should be at the noise floor
    for (const auto& t : res.tones.tones) REQUIRE(std::abs(t.v) < 1e-3);
}

TEST_CASE("nyquist reconstruction basics", "[baselines]") {
    ToneSet dc;
    dc.tones = {{cplx(1, 0), 0.0}};
    const real F = 32.0, T = 4.0;
    SignalSource src(dc, NoiseModel::none(), T, F, 1);
    NyquistReconstruction rec(src, F);

    SECTION("exact at the sample points") {
        for (int i : {0, 5, 31}) {
            real t = i / (2.0 * F);
            REQUIRE(std::abs(rec.evaluate(t) - cplx(1, 0)) < 1e-12);
        }
    }
    SECTION("average squared truncation error decays like 1/(FT)") {
        auto avg_err = [](real F_, real T_) {
            ToneSet one;
            one.tones = {{cplx(1, 0), 0.0}};
            SignalSource s(one, NoiseModel::none(), T_, F_, 1);
            NyquistReconstruction r(s, F_);
            real acc = 0.0;
            const int n = 400;
            for (int i = 0; i < n; ++i) {
                real t = T_ * (i + 0.5) / n;
                acc += std::norm(r.evaluate(t) - cplx(1, 0));
            }
            return acc / n;
        };
        std::vector<real> lx, ly;
        for (real ft : {64.0, 128.0, 256.0, 512.0}) {
            lx.push_back(std::log(ft));
            ly.push_back(std::log(avg_err(32.0, ft / 32.0)));
        }
        real slope = fit_slope(lx, ly);
        INFO("slope " << slope);
        REQUIRE(slope <= -0.7);
        REQUIRE(slope >= -1.3);
    }
}

TEST_CASE("dense dft baseline: exact on-grid, half-bin error off-grid", "[baselines]") {
    const real F = 64.0, T = 1.0;

    SECTION("on-grid frequencies are exact") {
        ToneSet ts;
        ts.eta = 5.0;
        ts.tones = {{cplx(1, 0), 17.0}, {cplx(0.5, 0.5), -23.0}};   // multiples of 1/T
        SignalSource src(ts, NoiseModel::none(), T, F, 1);
        auto out = dense_dft_baseline(src, 128, 2);
        auto m = match_tones(ts, out, T);
        REQUIRE(m.pairs.size() == 2);
        for (const auto& p : m.pairs) {
            REQUIRE(p.error.df < 1e-9);
            REQUIRE(p.error.dv < 1e-9);
        }
    }
    SECTION("off-grid frequencies land half a bin away") {
        ToneSet ts;
        ts.eta = 5.0;
        ts.tones = {{cplx(1, 0), 17.5}};
        SignalSource src(ts, NoiseModel::none(), T, F, 1);
        auto out = dense_dft_baseline(src, 128, 1);
        REQUIRE(out.k() == 1);
        REQUIRE(std::abs(out.tones[0].f - 17.5) == Catch::Approx(0.5 / T).margin(1e-9));
    }
    SECTION("n below 2FT is rejected") {
        ToneSet ts;
        ts.tones = {{cplx(1, 0), 10.0}};
        SignalSource src(ts, NoiseModel::none(), T, F, 1);
        REQUIRE_THROWS_AS(dense_dft_baseline(src, 64, 1), ConfigError);
    }
}
