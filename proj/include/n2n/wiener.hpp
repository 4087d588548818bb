#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "n2n/dsp.hpp"
#include "n2n/error.hpp"
#include "n2n/fft.hpp"

namespace n2n {

// Mean periodogram of the given (windowed) frames: the noise PSD estimate
// the Wiener gain divides by. Floored so later ratios stay finite.
inline std::vector<double> noise_psd_estimate(const FrameSequence& noise_frames,
                                              std::size_t n_fft) {
    if (noise_frames.n_frames == 0)
        throw MissingEstimateError("noise PSD: no noise frames to average");
    if (!noise_frames.windowed)
        throw SizeError("noise PSD: frames must be windowed like the analysis frames");
    const std::size_t bins = n_fft / 2 + 1;
    std::vector<double> psd(bins, 0.0);
    for (std::size_t i = 0; i < noise_frames.n_frames; ++i) {
        const auto spec = rfft(noise_frames.frame(i), n_fft);
        for (std::size_t k = 0; k < bins; ++k) psd[k] += std::norm(spec[k]);
    }
    for (auto& v : psd) v = std::max(v / static_cast<double>(noise_frames.n_frames), 1e-12);
    return psd;
}

// Decision-directed Wiener filter: per frame, a-priori SNR
//   xi(m) = alpha * G(m-1)^2 * gamma(m-1) + (1-alpha) * max(gamma(m) - 1, 0)
// with gain G = xi / (1 + xi), floored; synthesis by normalized OLA. Output
// length equals input length.
inline std::vector<double> wiener_denoise(std::span<const double> noisy,
                                          const FrameSequence& noise_frames, double alpha = 0.98,
                                          double gain_floor = 0.1) {
    const std::size_t L = noise_frames.frame_len;
    if (L < 2) throw SizeError("wiener_denoise: bad frame length");
    if (noisy.size() < L) throw SizeError("wiener_denoise: input shorter than one frame");
    const std::size_t n_fft = next_pow2(L);
    const auto psd = noise_psd_estimate(noise_frames, n_fft);
    const std::size_t bins = psd.size();
    const std::size_t hop = L / 2;

    // half a frame of silence on each side keeps every real sample in the
    // exact-COLA zone of the synthesis (filter leakage at the stream edges
    // would otherwise be divided by a vanishing window sum)
    const std::size_t n_frames = (noisy.size() + hop - 1) / hop + 1;
    std::vector<double> x((n_frames - 1) * hop + L, 0.0);
    std::copy(noisy.begin(), noisy.end(), x.begin() + static_cast<std::ptrdiff_t>(hop));
    FrameSequence fs = frame_signal(x, L, true);

    std::vector<double> prev_gain(bins, 1.0), prev_gamma(bins, 1.0);
    std::vector<std::complex<double>> shaped(bins);
    for (std::size_t m = 0; m < fs.n_frames; ++m) {
        const auto spec = rfft(fs.frame(m), n_fft);
        for (std::size_t k = 0; k < bins; ++k) {
            const double gamma = std::norm(spec[k]) / psd[k];
            const double xi = (m == 0)
                                  ? alpha + (1.0 - alpha) * std::max(gamma - 1.0, 0.0)
                                  : alpha * prev_gain[k] * prev_gain[k] * prev_gamma[k] +
                                        (1.0 - alpha) * std::max(gamma - 1.0, 0.0);
            const double gain = std::max(xi / (1.0 + xi), gain_floor);
            shaped[k] = spec[k] * gain;
            prev_gain[k] = gain;
            prev_gamma[k] = gamma;
        }
        const auto time = irfft(shaped, n_fft);
        auto f = fs.frame(m);
        std::copy(time.begin(), time.begin() + static_cast<std::ptrdiff_t>(L), f.begin());
    }

    const std::vector<double> y = overlap_add(fs);
    return {y.begin() + static_cast<std::ptrdiff_t>(hop),
            y.begin() + static_cast<std::ptrdiff_t>(hop + noisy.size())};
}

} // namespace n2n
