#pragma once

#include <cmath>
#include <span>

#include "error.hpp"

namespace n2n {

enum class VadDecision { speech, noise };

// Energy VAD with an exponentially-forgetting minimum noise floor. The first
// frame seeds the floor; afterwards a frame is speech when its energy clears
// the floor by threshold_offset_db, and speech decisions stretch over a
// 5-frame hangover. Only noise frames move the floor: drops are taken
// instantly, rises bleed in at rise_rate per frame.
struct VadState {
    double noise_floor_db = 0.0;
    int hangover_remaining = 0;
    double threshold_offset_db = 6.0;
    int hangover_frames = 5;
    double rise_rate = 0.05;
    bool initialized = false;
};

inline VadDecision vad_classify(std::span<const double> frame, VadState& state) {
    if (frame.empty()) throw SizeError("vad_classify: empty frame");
    double energy = 0.0;
    for (double v : frame) energy += v * v;
    energy /= static_cast<double>(frame.size());
    const double e_db = 10.0 * std::log10(energy + 1e-12);

    if (!state.initialized) {
        state.initialized = true;
        state.noise_floor_db = e_db;
        return VadDecision::noise;
    }
    if (e_db > state.noise_floor_db + state.threshold_offset_db) {
        state.hangover_remaining = state.hangover_frames;
        return VadDecision::speech;
    }
    if (state.hangover_remaining > 0) {
        --state.hangover_remaining;
        return VadDecision::speech;
    }
    if (e_db < state.noise_floor_db)
        state.noise_floor_db = e_db;
    else
        state.noise_floor_db += state.rise_rate * (e_db - state.noise_floor_db);
    return VadDecision::noise;
}

} // namespace n2n
