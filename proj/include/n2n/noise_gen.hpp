#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "audio.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "speech_gen.hpp"

namespace n2n {

enum class NoiseKind { white, wind, engine, driving, babble };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::white: return "white";
        case NoiseKind::wind: return "wind";
        case NoiseKind::engine: return "engine";
        case NoiseKind::driving: return "driving";
        case NoiseKind::babble: return "babble";
    }
    throw ConfigError("unknown noise kind value");
}

inline NoiseKind noise_kind_from_string(std::string_view s) {
    if (s == "white") return NoiseKind::white;
    if (s == "wind") return NoiseKind::wind;
    if (s == "engine") return NoiseKind::engine;
    if (s == "driving") return NoiseKind::driving;
    if (s == "babble") return NoiseKind::babble;
    throw ConfigError("unknown noise kind: " + std::string(s));
}

namespace detail {

inline void one_pole_lp(std::vector<double>& x, double fc_hz, int rate) {
    const double a = std::exp(-2.0 * std::numbers::pi * fc_hz / rate);
    double y = 0.0;
    for (auto& v : x) {
        y = (1.0 - a) * v + a * y;
        v = y;
    }
}

inline std::vector<double> gen_wind(std::size_t n, std::uint64_t seed, int rate) {
    constexpr double pi = std::numbers::pi;
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    one_pole_lp(x, 60.0, rate); // 1/f-ish rumble
    const double ph_gust = rng.uniform(0.0, 2.0 * pi);
    const double ph_slow = rng.uniform(0.0, 2.0 * pi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double env = (0.65 + 0.35 * std::sin(2.0 * pi * 0.4 * t + ph_gust)) *
                           (0.8 + 0.2 * std::sin(2.0 * pi * 0.13 * t + ph_slow));
        x[i] *= env;
    }
    return x;
}

inline std::vector<double> gen_engine(std::size_t n, std::uint64_t seed, int rate) {
    constexpr double pi = std::numbers::pi;
    Rng rng(seed);
    const double f0 = rng.uniform(30.0, 80.0);
    std::vector<double> x(n, 0.0);
    for (int k = 1; k * f0 <= 1500.0; ++k) {
        const double ph = rng.uniform(0.0, 2.0 * pi);
        const double a = 1.0 / k;
        const double w = 2.0 * pi * k * f0 / rate;
        for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(w * static_cast<double>(i) + ph);
    }
    const double ph_am = rng.uniform(0.0, 2.0 * pi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] *= 1.0 + 0.15 * std::sin(2.0 * pi * 2.0 * t + ph_am);
        x[i] += 0.05 * rng.normal(); // broadband bed
    }
    return x;
}

inline std::vector<double> gen_babble(std::size_t n, std::uint64_t seed, int rate) {
    std::vector<double> x(n, 0.0);
    for (int t = 0; t < 6; ++t) {
        SpeechGenParams p;
        p.f0_min_hz = 90.0 + 18.0 * t;
        p.f0_max_hz = p.f0_min_hz + 30.0;
        p.p_voiced = 0.7;
        p.p_unvoiced = 0.2;
        p.length_s = static_cast<double>(n) / rate;
        p.sample_rate = rate;
        p.seed = mix_seed(seed, 10 + static_cast<std::uint64_t>(t));
        const auto talker = gen_speech(p);
        const auto& ch = talker.channel(0);
        for (std::size_t i = 0; i < n && i < ch.size(); ++i) x[i] += 0.3 * ch[i];
    }
    return x;
}

inline double rms_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace detail

// Noise surrogates. Every kind is mean-subtracted and scaled to RMS 0.1,
// deterministic per seed; different seeds give decorrelated realizations.
inline AudioBuffer gen_noise(NoiseKind kind, std::size_t n_samples, std::uint64_t seed,
                             int sample_rate = 48000) {
    if (n_samples == 0) throw SizeError("gen_noise: zero length");
    if (sample_rate <= 0) throw ConfigError("gen_noise: sample rate must be positive");
    std::vector<double> x;
    switch (kind) {
        case NoiseKind::white: {
            Rng rng(seed);
            x.resize(n_samples);
            for (auto& v : x) v = rng.normal();
            break;
        }
        case NoiseKind::wind:
            x = detail::gen_wind(n_samples, seed, sample_rate);
            break;
        case NoiseKind::engine:
            x = detail::gen_engine(n_samples, seed, sample_rate);
            break;
        case NoiseKind::driving: {
            // engine bed plus wind at equal power
            auto e = detail::gen_engine(n_samples, mix_seed(seed, 1), sample_rate);
            auto w = detail::gen_wind(n_samples, mix_seed(seed, 2), sample_rate);
            const double re = detail::rms_of(e), rw = detail::rms_of(w);
            x.resize(n_samples);
            for (std::size_t i = 0; i < n_samples; ++i)
                x[i] = 0.5 * (e[i] + w[i] * (rw > 0.0 ? re / rw : 0.0));
            break;
        }
        case NoiseKind::babble:
            x = detail::gen_babble(n_samples, seed, sample_rate);
            break;
        default:
            throw ConfigError("gen_noise: unknown noise kind");
    }
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (auto& v : x) v -= mean;
    const double r = detail::rms_of(x);
    if (r > 0.0)
        for (auto& v : x) v *= 0.1 / r;
    return AudioBuffer(std::move(x), sample_rate);
}

} // namespace n2n
