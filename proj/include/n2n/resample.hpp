#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "n2n/error.hpp"

namespace n2n {

// Windowed-sinc rational resampler. The kernel is a Hann-windowed sinc with
// cutoff at the lower of the two Nyquist rates; for rational rate pairs the
// fractional sample phases repeat, so the taps are precomputed per phase.
inline std::vector<double> resample(std::span<const double> x, int in_rate, int out_rate) {
    if (in_rate <= 0 || out_rate <= 0) throw ConfigError("resample: rates must be positive");
    if (x.empty()) return {};
    if (in_rate == out_rate) return {x.begin(), x.end()};

    const double ratio = static_cast<double>(out_rate) / in_rate;
    const double fc = std::min(1.0, ratio); // relative to the input Nyquist
    const int half = static_cast<int>(std::ceil(32.0 / fc));

    const int g = std::gcd(in_rate, out_rate);
    const std::size_t phases = static_cast<std::size_t>(out_rate / g);
    const std::size_t out_len =
        (x.size() * static_cast<std::size_t>(out_rate) + static_cast<std::size_t>(in_rate) - 1) /
        static_cast<std::size_t>(in_rate);

    auto kernel = [&](double u) {
        if (std::abs(u) >= half) return 0.0;
        const double s = u == 0.0 ? fc
                                  : std::sin(std::numbers::pi * fc * u) / (std::numbers::pi * u);
        const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * u / half));
        return s * w;
    };

    // phase p serves output indices n with n mod phases == p; its taps start
    // at floor(t) - half + 1 relative to floor(t)
    std::vector<std::vector<double>> taps;
    const bool cache = phases <= 4096;
    if (cache) {
        taps.resize(phases, std::vector<double>(2 * static_cast<std::size_t>(half)));
        for (std::size_t p = 0; p < phases; ++p) {
            const double t = static_cast<double>(p) * in_rate / out_rate;
            const double frac = t - std::floor(t);
            for (int j = 0; j < 2 * half; ++j)
                taps[p][static_cast<std::size_t>(j)] = kernel(frac - (j - half + 1));
        }
    }

    std::vector<double> y(out_len, 0.0);
    const auto n_in = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t n = 0; n < out_len; ++n) {
        const double t = static_cast<double>(n) * in_rate / out_rate;
        const auto base = static_cast<std::ptrdiff_t>(std::floor(t));
        double acc = 0.0;
        if (cache) {
            const auto& h = taps[n % phases];
            for (int j = 0; j < 2 * half; ++j) {
                const std::ptrdiff_t m = base + j - half + 1;
                if (m < 0 || m >= n_in) continue;
                acc += x[static_cast<std::size_t>(m)] * h[static_cast<std::size_t>(j)];
            }
        } else {
            const double frac = t - static_cast<double>(base);
            for (int j = 0; j < 2 * half; ++j) {
                const std::ptrdiff_t m = base + j - half + 1;
                if (m < 0 || m >= n_in) continue;
                acc += x[static_cast<std::size_t>(m)] * kernel(frac - (j - half + 1));
            }
        }
        y[n] = acc;
    }
    return y;
}

} // namespace n2n
