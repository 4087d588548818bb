#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "audio.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace n2n {

struct FormantSpec {
    double freq_hz = 500.0;
    double bandwidth_hz = 90.0;
};

// Knobs for the synthetic talker. Distinct parameter sets act as distinct
// speakers; the defaults give a generic mid-pitch voice.
struct SpeechGenParams {
    double f0_min_hz = 100.0;
    double f0_max_hz = 140.0;
    double vibrato_depth = 0.01; // fractional f0 excursion
    double vibrato_rate_hz = 5.0;
    std::vector<FormantSpec> formants{{500.0, 90.0}, {1500.0, 130.0}, {2500.0, 180.0}};
    double p_voiced = 0.6;
    double p_unvoiced = 0.25; // remainder is silence
    double length_s = 1.0;
    int sample_rate = 48000;
    std::uint64_t seed = 0;
};

namespace detail {

inline void validate(const SpeechGenParams& p) {
    if (p.f0_min_hz < 80.0 || p.f0_max_hz > 300.0 || p.f0_min_hz > p.f0_max_hz)
        throw ConfigError("gen_speech: f0 range must lie within [80, 300] Hz");
    if (p.length_s <= 0.0) throw ConfigError("gen_speech: length must be positive");
    if (p.sample_rate <= 0) throw ConfigError("gen_speech: sample rate must be positive");
    if (p.formants.size() < 2 || p.formants.size() > 3)
        throw ConfigError("gen_speech: expected 2 or 3 formants");
    for (const auto& f : p.formants)
        if (f.bandwidth_hz <= 0.0 || f.freq_hz <= 0.0 || f.freq_hz >= p.sample_rate / 2.0)
            throw ConfigError("gen_speech: formant outside (0, nyquist)");
    if (p.p_voiced < 0.0 || p.p_unvoiced < 0.0 || p.p_voiced + p.p_unvoiced > 1.0)
        throw ConfigError("gen_speech: bad span probabilities");
    if (p.vibrato_depth < 0.0 || p.vibrato_depth > 0.05)
        throw ConfigError("gen_speech: vibrato depth outside [0, 0.05]");
}

// Two-pole resonator applied in place; gain compensated so cascades stay sane.
inline void resonate(std::vector<double>& x, double freq_hz, double bw_hz, int rate) {
    const double r = std::exp(-std::numbers::pi * bw_hz / rate);
    const double c = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq_hz / rate);
    const double g = 1.0 - r;
    double y1 = 0.0, y2 = 0.0;
    for (auto& v : x) {
        const double y = g * v + c * y1 - r * r * y2;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

inline void fade_edges(std::vector<double>& x, std::size_t ramp) {
    ramp = std::min(ramp, x.size() / 2);
    for (std::size_t i = 0; i < ramp; ++i) {
        const double w =
            0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / ramp);
        x[i] *= w;
        x[x.size() - 1 - i] *= w;
    }
}

} // namespace detail

// Speech-like surrogate: glottal pulse train with vibrato through a resonator
// cascade for voiced spans, band-passed noise bursts for unvoiced spans,
// silence in between. Peak-normalized to 1.0, deterministic per seed.
// The first span is always voiced so the output is never all-zero.
inline AudioBuffer gen_speech(const SpeechGenParams& p) {
    detail::validate(p);
    constexpr double pi = std::numbers::pi;
    const int rate = p.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(p.length_s * rate));
    std::vector<double> out(n, 0.0);
    Rng rng(p.seed);

    std::size_t pos = 0;
    bool first = true;
    while (pos < n) {
        const double dur_s = rng.uniform(0.08, 0.25);
        const std::size_t len =
            std::min(n - pos, static_cast<std::size_t>(std::llround(dur_s * rate)));
        const double u = rng.uniform();
        enum { voiced, unvoiced, silence } kind;
        if (first || u < p.p_voiced)
            kind = voiced;
        else if (u < p.p_voiced + p.p_unvoiced)
            kind = unvoiced;
        else
            kind = silence;
        first = false;

        std::vector<double> seg(len, 0.0);
        if (kind == voiced) {
            const double f0 = rng.uniform(p.f0_min_hz, p.f0_max_hz);
            const double vib_ph = rng.uniform(0.0, 2.0 * pi);
            double phase = 1.0; // fire a pulse on the first sample
            for (std::size_t i = 0; i < len; ++i) {
                const double t = static_cast<double>(i) / rate;
                const double f = f0 * (1.0 + p.vibrato_depth *
                                                 std::sin(2.0 * pi * p.vibrato_rate_hz * t + vib_ph));
                phase += f / rate;
                if (phase >= 1.0) {
                    phase -= 1.0;
                    seg[i] = 1.0;
                }
            }
            for (const auto& fm : p.formants) detail::resonate(seg, fm.freq_hz, fm.bandwidth_hz, rate);
        } else if (kind == unvoiced) {
            for (auto& v : seg) v = rng.normal();
            detail::resonate(seg, 3200.0, 1600.0, rate);
            for (auto& v : seg) v *= 0.15;
        }
        if (kind != silence) detail::fade_edges(seg, static_cast<std::size_t>(rate) * 3 / 1000);
        std::copy(seg.begin(), seg.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
        pos += len;
    }

    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    for (auto& v : out) v /= peak;
    return AudioBuffer(std::move(out), rate);
}

} // namespace n2n
