#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "n2n/error.hpp"

namespace n2n {

// A sampled waveform, mono or stereo, samples nominally in [-1, 1].
struct AudioBuffer {
    std::vector<std::vector<double>> channels;
    int sample_rate = 48000;

    AudioBuffer() = default;
    AudioBuffer(std::vector<double> mono, int rate)
        : channels{std::move(mono)}, sample_rate(rate) {}
    AudioBuffer(std::vector<double> left, std::vector<double> right, int rate)
        : channels{std::move(left), std::move(right)}, sample_rate(rate) {
        if (channels[0].size() != channels[1].size())
            throw SizeError("stereo channels differ in length");
    }

    std::size_t n_channels() const { return channels.size(); }
    std::size_t n_samples() const { return channels.empty() ? 0 : channels[0].size(); }

    const std::vector<double>& channel(std::size_t c) const { return channels.at(c); }
    std::vector<double>& channel(std::size_t c) { return channels.at(c); }

    double peak() const {
        double m = 0.0;
        for (const auto& ch : channels)
            for (double s : ch) m = std::max(m, std::abs(s));
        return m;
    }

    bool all_finite() const {
        for (const auto& ch : channels)
            for (double s : ch)
                if (!std::isfinite(s)) return false;
        return true;
    }
};

// Mono mixdown (L+R)/2; identity for mono input.
inline std::vector<double> mixdown(const AudioBuffer& buf) {
    if (buf.n_channels() == 1) return buf.channel(0);
    if (buf.n_channels() != 2) throw SizeError("mixdown expects 1 or 2 channels");
    const auto& l = buf.channel(0);
    const auto& r = buf.channel(1);
    std::vector<double> m(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) m[i] = 0.5 * (l[i] + r[i]);
    return m;
}

// Scale so the loudest sample across all channels sits at exactly +/-1.0.
// Division (not multiplication by a reciprocal) keeps the peak sample exact,
// which also makes the operation idempotent.
inline AudioBuffer peak_normalize(const AudioBuffer& buf) {
    double m = buf.peak();
    if (m == 0.0) throw DegenerateSignalError("peak_normalize: all-zero buffer");
    AudioBuffer out = buf;
    for (auto& ch : out.channels)
        for (double& s : ch) s = s / m;
    return out;
}

inline double rms(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double mean_square(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc / static_cast<double>(x.size());
}

} // namespace n2n
