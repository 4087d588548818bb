#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"
#include "fft.hpp"

namespace n2n {

inline constexpr std::size_t kNoiseFeatureDim = 8;
using NoiseFeature = std::array<double, kNoiseFeatureDim>;

// 8 mel-spaced band levels from a 1024-point FFT, each log10 of the band's
// mean spectral magnitude (floored at 1e-12). Scaling the frame by c shifts
// every component by log10(c).
inline NoiseFeature noise_features(std::span<const double> frame, int sample_rate = 48000) {
    constexpr std::size_t n_fft = 1024;
    if (frame.size() < 64) throw SizeError("noise_features: frame shorter than 64 samples");
    if (frame.size() > n_fft) throw SizeError("noise_features: frame longer than the 1024-point fft");
    if (sample_rate <= 0) throw ConfigError("noise_features: sample rate must be positive");

    const auto spec = rfft(frame, n_fft);

    const auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    const auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double m_lo = hz_to_mel(50.0);
    const double m_hi = hz_to_mel(sample_rate / 2.0);

    std::array<std::size_t, kNoiseFeatureDim + 1> edge{};
    for (std::size_t k = 0; k <= kNoiseFeatureDim; ++k) {
        const double f = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(k) /
                                              kNoiseFeatureDim);
        auto bin = static_cast<std::size_t>(std::llround(f / sample_rate * n_fft));
        edge[k] = std::min(bin, spec.size());
        if (k > 0) edge[k] = std::max(edge[k], edge[k - 1] + 1);
    }
    edge[0] = std::max<std::size_t>(edge[0], 1); // skip dc
    edge[kNoiseFeatureDim] = spec.size();

    NoiseFeature feat{};
    for (std::size_t k = 0; k < kNoiseFeatureDim; ++k) {
        double acc = 0.0;
        for (std::size_t b = edge[k]; b < edge[k + 1]; ++b) acc += std::abs(spec[b]);
        const double mean = acc / static_cast<double>(edge[k + 1] - edge[k]);
        feat[k] = std::log10(std::max(mean, 1e-12));
    }
    return feat;
}

// Online nearest-centroid clustering over noise features: assign-and-EMA
// within spawn_threshold, spawn below the k_max cap, otherwise fall back to
// the nearest centroid without moving it.
struct NoiseClusterBank {
    std::vector<NoiseFeature> centroids;
    std::vector<std::size_t> counts;
    double spawn_threshold = 1.0;
    std::size_t k_max = 4;
    double ema_alpha = 0.05;
};

namespace detail {

inline double feature_distance(const NoiseFeature& a, const NoiseFeature& b) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(d2);
}

} // namespace detail

inline int classifier_step(NoiseClusterBank& bank, const NoiseFeature& feat) {
    if (bank.k_max == 0) throw ConfigError("classifier_step: k_max must be at least 1");
    if (bank.spawn_threshold <= 0.0) throw ConfigError("classifier_step: threshold must be positive");
    if (bank.ema_alpha <= 0.0 || bank.ema_alpha > 1.0)
        throw ConfigError("classifier_step: ema_alpha outside (0, 1]");
    if (bank.centroids.size() != bank.counts.size())
        throw ConfigError("classifier_step: centroid/count size mismatch");

    if (bank.centroids.empty()) {
        bank.centroids.push_back(feat);
        bank.counts.push_back(1);
        return 0;
    }
    std::size_t best = 0;
    double best_d = detail::feature_distance(feat, bank.centroids[0]);
    for (std::size_t i = 1; i < bank.centroids.size(); ++i) {
        const double d = detail::feature_distance(feat, bank.centroids[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best_d <= bank.spawn_threshold) {
        auto& c = bank.centroids[best];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += bank.ema_alpha * (feat[i] - c[i]);
        ++bank.counts[best];
        return static_cast<int>(best);
    }
    if (bank.centroids.size() < bank.k_max) {
        bank.centroids.push_back(feat);
        bank.counts.push_back(1);
        return static_cast<int>(bank.centroids.size() - 1);
    }
    return static_cast<int>(best); // bank full and nothing close: nearest, untouched
}

} // namespace n2n
