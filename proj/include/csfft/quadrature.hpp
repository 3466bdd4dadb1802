#pragma once

#include <array>
#include <functional>

#include "csfft/common.hpp"

namespace csfft {

namespace detail {
// 20-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; mirror for the rest).
inline constexpr std::array<real, 10> kGL20Nodes = {
    0.0765265211334973, 0.2277858511416451, 0.3737060887154195, 0.5108670019508271,
    0.6360536807265150, 0.7463319064601508, 0.8391169718222188, 0.9122344282513259,
    0.9639719272779138, 0.9931285991850949};
inline constexpr std::array<real, 10> kGL20Weights = {
    0.1527533871307258, 0.1491729864726037, 0.1420961093183820, 0.1316886384491766,
    0.1181945319615184, 0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
    0.0406014298003869, 0.0176140071391521};
}  // namespace detail

/// Composite 20-point Gauss-Legendre over [a, b], panel count doubled until two
/// successive estimates agree to `rel_tol` relatively (or `max_panels` is hit).
template <typename F>
real integrate(F&& f, real a, real b, real rel_tol = 1e-8, int max_panels = 1 << 14) {
    auto panelwise = [&](int panels) {
        real total = 0.0;
        const real h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            const real mid = a + h * (p + 0.5);
            const real half = 0.5 * h;
            real acc = 0.0;
            for (int i = 0; i < 10; ++i) {
                const real dx = half * detail::kGL20Nodes[i];
                acc += detail::kGL20Weights[i] * (f(mid + dx) + f(mid - dx));
            }
            total += half * acc;
        }
        return total;
    };
    real prev = panelwise(1);
    for (int panels = 2; panels <= max_panels; panels *= 2) {
        real cur = panelwise(panels);
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), real(1e-300))) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace csfft
