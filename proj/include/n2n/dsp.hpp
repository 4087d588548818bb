#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "n2n/audio.hpp"
#include "n2n/error.hpp"

namespace n2n {

// Hann window, periodic by default: w[k] = 0.5*(1 - cos(2*pi*k/n)). For even
// n the upper half is constructed as 1 - w[k - n/2] so that
// w[k] + w[k + n/2] == 1 holds exactly, which makes 50% overlap-add
// reconstruction exact up to rounding of the products. The symmetric form
// divides by n-1 instead and is only used where an analysis convention
// requires it.
inline std::vector<double> hann_window(std::size_t n, bool periodic = true) {
    if (n < 2) throw SizeError("hann_window: n must be >= 2");
    std::vector<double> w(n);
    if (periodic) {
        const std::size_t half = n / 2;
        for (std::size_t k = 0; k < half; ++k)
            w[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n)));
        for (std::size_t k = half; k < n; ++k)
            w[k] = (n % 2 == 0)
                       ? 1.0 - w[k - half]
                       : 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                               static_cast<double>(n)));
    } else {
        for (std::size_t k = 0; k < n; ++k)
            w[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) /
                                         static_cast<double>(n - 1)));
    }
    return w;
}

// Frames of one channel at 50% overlap (hop = frame_len/2), row-major.
struct FrameSequence {
    std::vector<double> frames; // n_frames * frame_len
    std::size_t frame_len = 0;
    std::size_t n_frames = 0;
    bool windowed = false;
    std::size_t source_len = 0;

    std::size_t hop() const { return frame_len / 2; }
    std::span<double> frame(std::size_t i) {
        return {frames.data() + i * frame_len, frame_len};
    }
    std::span<const double> frame(std::size_t i) const {
        return {frames.data() + i * frame_len, frame_len};
    }
};

inline std::size_t frame_count(std::size_t source_len, std::size_t frame_len) {
    if (source_len < frame_len) return 0;
    return (source_len - frame_len) / (frame_len / 2) + 1;
}

inline FrameSequence frame_signal(std::span<const double> x, std::size_t frame_len,
                                  bool apply_window) {
    if (frame_len < 2 || frame_len % 2 != 0)
        throw SizeError("frame_signal: frame_len must be even and >= 2");
    if (x.size() < frame_len)
        throw SizeError("frame_signal: signal shorter than one frame");
    FrameSequence fs;
    fs.frame_len = frame_len;
    fs.source_len = x.size();
    fs.windowed = apply_window;
    fs.n_frames = frame_count(x.size(), frame_len);
    fs.frames.resize(fs.n_frames * frame_len);
    const std::size_t hop = frame_len / 2;
    const std::vector<double> w = apply_window ? hann_window(frame_len) : std::vector<double>{};
    for (std::size_t i = 0; i < fs.n_frames; ++i) {
        const double* src = x.data() + i * hop;
        double* dst = fs.frames.data() + i * frame_len;
        if (apply_window)
            for (std::size_t k = 0; k < frame_len; ++k) dst[k] = src[k] * w[k];
        else
            for (std::size_t k = 0; k < frame_len; ++k) dst[k] = src[k];
    }
    return fs;
}

// Overlap-add synthesis of Hann-windowed frames, normalized pointwise by the
// summed window envelope. Envelope entries below 1e-8 give 0 (the very first
// and last sample, where the periodic Hann is 0).
inline std::vector<double> overlap_add(const FrameSequence& fs) {
    if (fs.n_frames == 0) throw SizeError("overlap_add: empty frame sequence");
    if (!fs.windowed) throw SizeError("overlap_add: frames must be windowed");
    const std::size_t hop = fs.hop();
    const std::size_t out_len = (fs.n_frames - 1) * hop + fs.frame_len;
    std::vector<double> acc(out_len, 0.0), env(out_len, 0.0);
    const std::vector<double> w = hann_window(fs.frame_len);
    for (std::size_t i = 0; i < fs.n_frames; ++i) {
        const double* f = fs.frames.data() + i * fs.frame_len;
        double* a = acc.data() + i * hop;
        double* e = env.data() + i * hop;
        for (std::size_t k = 0; k < fs.frame_len; ++k) {
            a[k] += f[k];
            e[k] += w[k];
        }
    }
    for (std::size_t t = 0; t < out_len; ++t)
        acc[t] = env[t] < 1e-8 ? 0.0 : acc[t] / env[t];
    return acc;
}

// y_L = y_M + y_S, y_R = y_M - y_S.
inline std::pair<std::vector<double>, std::vector<double>>
mid_side_compose(std::span<const double> mid, std::span<const double> side) {
    if (mid.size() != side.size()) throw SizeError("mid_side_compose: length mismatch");
    std::vector<double> l(mid.size()), r(mid.size());
    for (std::size_t i = 0; i < mid.size(); ++i) {
        l[i] = mid[i] + side[i];
        r[i] = mid[i] - side[i];
    }
    return {std::move(l), std::move(r)};
}

// m = (L+R)/2, s = (L-R)/2; exact inverse of mid_side_compose.
inline std::pair<std::vector<double>, std::vector<double>>
mid_side_decompose(std::span<const double> left, std::span<const double> right) {
    if (left.size() != right.size()) throw SizeError("mid_side_decompose: length mismatch");
    std::vector<double> m(left.size()), s(left.size());
    for (std::size_t i = 0; i < left.size(); ++i) {
        m[i] = 0.5 * (left[i] + right[i]);
        s[i] = 0.5 * (left[i] - right[i]);
    }
    return {std::move(m), std::move(s)};
}

// Scales noise so that 10*log10(P_clean / P_noise) = snr_db over the whole
// file, then returns (clean + scaled_noise, scaled_noise). Noise longer than
// clean is truncated.
inline std::pair<std::vector<double>, std::vector<double>>
mix_at_snr(std::span<const double> clean, std::span<const double> noise, double snr_db) {
    if (noise.size() < clean.size()) throw SizeError("mix_at_snr: noise shorter than clean");
    std::vector<double> n(noise.begin(), noise.begin() + static_cast<std::ptrdiff_t>(clean.size()));
    double rms_c = 0.0, rms_n = 0.0;
    for (double v : clean) rms_c += v * v;
    for (double v : n) rms_n += v * v;
    rms_c = std::sqrt(rms_c / static_cast<double>(clean.size()));
    rms_n = std::sqrt(rms_n / static_cast<double>(n.size()));
    if (rms_c == 0.0 || rms_n == 0.0)
        throw DegenerateSignalError("mix_at_snr: silent clean or noise");
    const double a = rms_c / (rms_n * std::pow(10.0, snr_db / 20.0));
    std::vector<double> noisy(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        n[i] *= a;
        noisy[i] = clean[i] + n[i];
    }
    return {std::move(noisy), std::move(n)};
}

// Empirical correlation coefficient of two equal-length sequences.
inline double correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw SizeError("correlation: length mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace n2n
