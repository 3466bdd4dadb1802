#pragma once

#include <vector>

#include "csfft/common.hpp"

namespace csfft {

/// In-place radix-2 transform, power-of-two length only.
/// sign = -1: X_j = sum_q x_q e^{-2 pi i j q / N} (forward)
/// sign = +1: X_j = sum_q x_q e^{+2 pi i j q / N} (no 1/N scaling)
inline void fft_pow2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw InternalError("fft_pow2: length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const real ang = static_cast<real>(sign) / static_cast<real>(len);
        const std::size_t half = len >> 1;
        std::vector<cplx> w(half);
        for (std::size_t k = 0; k < half; ++k) w[k] = unit_phase(ang * static_cast<real>(k));
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

}  // namespace csfft
