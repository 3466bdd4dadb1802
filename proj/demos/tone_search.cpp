// Minimal usage example: build a noisy 3-tone signal, recover the tones, and
// print them next to the ground truth.

#include <cstdio>

#include <csfft/csfft.hpp>

int main() {
    using namespace csfft;

    const int k = 3;
    const real F = 1200.0;   // band limit, Hz
    const real eta = 40.0;   // minimum tone separation, Hz

    RecoverOptions opt;
    opt.k = k;
    const real T = recommended_duration(k, F, eta, opt) * 1.05;

    auto source = make_instance(k, F, eta, {0.5, 1.5}, NoiseModel::gaussian(1e-4), T,
                                /*seed=*/2024);

    std::printf("sampling window T = %.1f s, band [-%.0f, %.0f] Hz\n", T, F, F);
    RecoveryReport report = recover(source, opt, /*seed=*/7);

    std::printf("%-12s %-12s %-10s %-10s\n", "true f", "found f", "|v| true", "|v| found");
    for (const auto& p : report.per_tone)
        std::printf("%-12.4f %-12.4f %-10.4f %-10.4f\n", p.f_true, p.f_found, p.v_true_abs,
                    std::abs(p.v_found));
    std::printf("eq2 = %.3e, eq3 = %.3e, noise level^2 = %.3e\n", report.eq2, report.eq3,
                report.noise_level2);
    std::printf("samples used: %llu over %.1f s (Nyquist would need %.0f)\n",
                static_cast<unsigned long long>(report.samples_used), T, 2.0 * F * T);
    return 0;
}
