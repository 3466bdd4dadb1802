#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace csfft {

using real = double;
using cplx = std::complex<double>;

inline constexpr real kPi = 3.14159265358979323846;
inline constexpr real kTwoPi = 6.28318530717958647692;

/// Bad parameters (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Sampling schedule does not fit in the duration T (CLI exit code 3).
/// Carries the computed minimal feasible duration.
struct DurationError : std::runtime_error {
    real minimum_duration;
    DurationError(const std::string& what, real t_min)
        : std::runtime_error(what + " (minimum feasible T = " + std::to_string(t_min) + " s)"),
          minimum_duration(t_min) {}
};

/// Internal invariant violation (CLI exit code 4).
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// sin and cos of 2*pi*x given x in cycles. Branch-free quadrant dispatch with
/// polynomials on [-pi/4, pi/4]; max abs error vs the true value < 1e-15.
/// Deterministic across call sites, which the sampling contract relies on.
inline void sin_cos_cycles(real x, real& s, real& c) {
    real u = 4.0 * (x - std::floor(x));   // [0, 4)
    real qd = std::floor(u + 0.5);
    int q = static_cast<int>(qd) & 3;
    real th = 1.5707963267948966 * (u - qd);   // [-pi/4, pi/4]
    real t2 = th * th;
    real ps = th * (1.0 + t2 * (-1.6666666666666666e-01 + t2 * (8.3333333333333332e-03 +
              t2 * (-1.9841269841269841e-04 + t2 * (2.7557319223985893e-06 +
              t2 * (-2.5052108385441720e-08 + t2 * (1.6059043836821613e-10 +
              t2 * (-7.6471637318198164e-13))))))));
    real pc = 1.0 + t2 * (-0.5 + t2 * (4.1666666666666664e-02 + t2 * (-1.3888888888888889e-03 +
              t2 * (2.4801587301587302e-05 + t2 * (-2.7557319223985888e-07 +
              t2 * (2.0876756987868100e-09 + t2 * (-1.1470745597729725e-11 +
              t2 * (4.7794773323873853e-14))))))));
    bool swap = (q & 1) != 0;
    real ssel = swap ? pc : ps;
    real csel = swap ? ps : pc;
    s = (q == 2 || q == 3) ? -ssel : ssel;
    c = (q == 1 || q == 2) ? -csel : csel;
}

/// e^{2*pi*i*x} with x in cycles.
inline cplx unit_phase(real x) {
    real s, c;
    sin_cos_cycles(x, s, c);
    return {c, s};
}

/// Argument of z as a fraction of a turn in [0, 1).
inline real arg_cycles(cplx z) {
    real a = std::atan2(z.imag(), z.real()) / kTwoPi;
    return a - std::floor(a);
}

/// Reduce x into [0, m).
inline real positive_mod(real x, real m) {
    real r = x - m * std::floor(x / m);
    if (r >= m) r -= m;   // guard against floor rounding at the boundary
    return r;
}

/// Reduce a frequency onto [-F, F), the signed band of width 2F.
inline real wrap_band(real f, real band_limit) {
    return positive_mod(f + band_limit, 2.0 * band_limit) - band_limit;
}

/// Circular distance on [0, 1) cycles: min_k |a - b + k|.
inline real circ_dist_cycles(real a, real b) {
    real d = a - b;
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

}  // namespace csfft
