#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace csfft;
using csfft::testing::median;

TEST_CASE("evaluate_pure basics and direct-summation oracle", "[signal_model]") {
    ToneSet zero_f;
    zero_f.tones = {{cplx(1, 0), 0.0}};
    REQUIRE(std::abs(evaluate_pure(zero_f, 0.37) - cplx(1, 0)) < 1e-15);

    ToneSet any_f;
    any_f.tones = {{cplx(1, 0), 917.3}};
    REQUIRE(std::abs(evaluate_pure(any_f, 0.0) - cplx(1, 0)) < 1e-15);

    // direct evaluation oracle, independent complex-exponential path
    ToneSet two;
    two.tones = {{cplx(2, 0), 100.0}, {cplx(1, 0), 130.0}};
    cplx want = 2.0 * std::exp(cplx(0, kTwoPi * 100.0 * 0.01)) +
                1.0 * std::exp(cplx(0, kTwoPi * 130.0 * 0.01));
    REQUIRE(std::abs(evaluate_pure(two, 0.01) - want) < 1e-12);
}

TEST_CASE("sample counts queries exactly and honours [0, T]", "[signal_model]") {
    ToneSet ts;
    ts.tones = {{cplx(1, 0), 10.0}};
    SignalSource src(ts, NoiseModel::none(), 1.0, 100.0, 3);
    REQUIRE(src.samples_used() == 0);
    for (int i = 1; i <= 257; ++i) src.sample(0.001 * (i % 997));
    REQUIRE(src.samples_used() == 257);
    REQUIRE_THROWS_AS(src.sample(-0.01), std::domain_error);
    REQUIRE_THROWS_AS(src.sample(1.01), std::domain_error);
    REQUIRE(src.samples_used() == 257);   // failed queries do not count
    src.probe(0.5);
    REQUIRE(src.samples_used() == 257);   // probes never count
}

TEST_CASE("noiseless and zero-variance sampling equal the pure signal", "[signal_model]") {
    ToneSet ts;
    ts.tones = {{cplx(0.3, -0.8), 42.0}};
    SignalSource none(ts, NoiseModel::none(), 1.0, 100.0, 3);
    SignalSource zerovar(ts, NoiseModel::gaussian(0.0), 1.0, 100.0, 3);
    for (real t : {0.0, 0.1, 0.77}) {
        REQUIRE(none.sample(t) == evaluate_pure(ts, t));
        REQUIRE(zerovar.sample(t) == evaluate_pure(ts, t));
    }
}

TEST_CASE("gaussian noise has the configured variance", "[signal_model]") {
    ToneSet ts;
    ts.tones = {{cplx(1, 0), 50.0}};
    const real var = 0.04;
    SignalSource src(ts, NoiseModel::gaussian(var), 1.0, 100.0, 99);
    Rng rng(1);
    real acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        real t = rng.uniform(0.0, 1.0);
        acc += std::norm(src.sample(t) - evaluate_pure(ts, t));
    }
    REQUIRE(acc / n == Catch::Approx(var).epsilon(0.05));
}

TEST_CASE("repeated queries at the same t are identical, any thread order", "[signal_model]") {
    ToneSet ts;
    ts.tones = {{cplx(1, 0), 50.0}};
    SignalSource src(ts, NoiseModel::gaussian(0.5), 1.0, 100.0, 7);
    cplx first = src.sample(0.333);
    for (int i = 0; i < 5; ++i) REQUIRE(src.sample(0.333) == first);
}

TEST_CASE("noise_level closed forms and quadrature oracle", "[signal_model]") {
    ToneSet ts;
    ts.tones = {{cplx(2, 0), 10.0}, {cplx(1, 0), 60.0}};   // sum |v|^2 = 5

    SECTION("none: only the delta term") {
        SignalSource src(ts, NoiseModel::none(), 1.0, 100.0, 1);
        REQUIRE(noise_level(src, 1e-6) == Catch::Approx(5e-6).epsilon(1e-12));
    }
    SECTION("gaussian: per-sample variance") {
        SignalSource src(ts, NoiseModel::gaussian(0.01), 1.0, 100.0, 1);
        REQUIRE(noise_level(src, 0.0) == Catch::Approx(0.01).epsilon(1e-12));
    }
    SECTION("decay vs an independent Simpson oracle") {
        const real T = 1.0, rate = 3.0;
        SignalSource src(ts, NoiseModel::decay(rate), T, 100.0, 1);
        // Simpson's rule on |x*(t)|^2 (e^{-t/(rate T)} - 1)^2, independent of
        // the library quadrature
        const int n = 20000;
        real acc = 0.0;
        auto f = [&](real t) {
            real d = std::exp(-t / (rate * T)) - 1.0;
            return std::norm(evaluate_pure(ts, t)) * d * d;
        };
        for (int i = 0; i < n; ++i) {
            real a = T * i / n, b = T * (i + 1) / n;
            acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        real want = acc / T + 1e-6 * 5.0;
        REQUIRE(noise_level(src, 1e-6) == Catch::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("make_instance respects separation over many seeds", "[signal_model]") {
    for (uint64_t seed = 1; seed <= 1000; ++seed) {
        auto src = make_instance(5, 4200.0, 30.0, {1.0, 1.0}, NoiseModel::none(), 1.0, seed);
        REQUIRE(src.tones().k() == 5);
        REQUIRE(src.tones().min_separation() >= 30.0);
        for (const auto& t : src.tones().tones) {
            REQUIRE(t.f >= -4200.0);
            REQUIRE(t.f <= 4200.0);
        }
    }
}

TEST_CASE("make_instance determinism and edge cases", "[signal_model]") {
    auto a = make_instance(3, 1000.0, 50.0, {0.5, 2.0}, NoiseModel::none(), 1.0, 77);
    auto b = make_instance(3, 1000.0, 50.0, {0.5, 2.0}, NoiseModel::none(), 1.0, 77);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(a.tones().tones[static_cast<std::size_t>(i)].f == b.tones().tones[static_cast<std::size_t>(i)].f);
        REQUIRE(a.tones().tones[static_cast<std::size_t>(i)].v == b.tones().tones[static_cast<std::size_t>(i)].v);
    }

    auto single = make_instance(1, 100.0, 1e9, {1.0, 1.0}, NoiseModel::none(), 1.0, 5);
    REQUIRE(single.tones().k() == 1);   // no separation constraint at k=1

    REQUIRE_THROWS_AS(make_instance(10, 100.0, 50.0, {1.0, 1.0}, NoiseModel::none(), 1.0, 1),
                      ConfigError);   // k*eta >= 2F
}

TEST_CASE("piano thought-experiment instance", "[signal_model]") {
    auto src = make_instance(5, 4200.0, 30.0, {1.0, 1.0}, NoiseModel::none(), 1.0, 2024);
    REQUIRE(src.tones().k() == 5);
    REQUIRE(src.tones().min_separation() >= 30.0);
}
