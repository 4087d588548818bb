#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "adam.hpp"
#include "audio.hpp"
#include "dsp.hpp"
#include "error.hpp"
#include "model.hpp"
#include "noise_classifier.hpp"
#include "trainer.hpp"
#include "vad.hpp"

namespace n2n {

struct PipelineConfig {
    std::size_t frame_len = 960;
    int sample_rate = 48000;
    bool train_switch = false;
    // with the switch on, frames at or past this index run in off mode
    // (field protocol: adapt first, then operate)
    std::size_t switch_off_after = std::numeric_limits<std::size_t>::max();
    std::size_t minibatch = 128;
    double learning_rate = 0.0004;
    std::size_t k_max = 4;
    double spawn_threshold = 1.0;
    double vad_offset_db = 6.0;
    bool infer_mid = false; // denoise the mid signal instead of the left channel
};

template <typename Real>
struct BankEntry {
    FcnnModel<Real> model;
    AdamState<Real> adam;
    std::size_t steps_taken = 0;
};

// Live state of the field loop: VAD, noise clusters, one network per noise
// type (seeded from the pretrained supervised model on first encounter), and
// the per-type buffer of stereo training pairs awaiting a minibatch.
template <typename Real>
struct PipelineState {
    PipelineConfig cfg;
    FcnnModel<Real> pretrained;
    VadState vad;
    NoiseClusterBank clusters;
    std::map<int, BankEntry<Real>> bank;
    std::map<int, std::vector<TrainingPair>> pending;
    int active_noise_type = -1;
    std::size_t total_steps = 0;
};

struct FrameTraceRow {
    std::size_t frame_index = 0;
    VadDecision vad = VadDecision::noise;
    int noise_type_id = -1;
    bool switch_on = false;
    std::size_t steps_taken = 0;
};

template <typename Real>
PipelineState<Real> make_pipeline(FcnnModel<Real> pretrained, const PipelineConfig& cfg) {
    if (cfg.frame_len < 2 || cfg.frame_len % 2 != 0)
        throw ConfigError("make_pipeline: frame_len must be even and >= 2");
    if (cfg.sample_rate <= 0) throw ConfigError("make_pipeline: sample rate must be positive");
    if (cfg.minibatch == 0) throw ConfigError("make_pipeline: minibatch must be positive");
    if (cfg.learning_rate < 0.0) throw ConfigError("make_pipeline: negative learning rate");
    if (cfg.k_max == 0) throw ConfigError("make_pipeline: k_max must be at least 1");
    if (cfg.spawn_threshold <= 0.0) throw ConfigError("make_pipeline: threshold must be positive");
    PipelineState<Real> st;
    st.cfg = cfg;
    st.pretrained = std::move(pretrained);
    st.vad.threshold_offset_db = cfg.vad_offset_db;
    st.clusters.k_max = cfg.k_max;
    st.clusters.spawn_threshold = cfg.spawn_threshold;
    return st;
}

namespace detail {

// One optimizer step on a full minibatch of buffered pairs; mirrors the
// trainer's inner loop.
template <typename Real>
void pipeline_adam_step(BankEntry<Real>& entry, std::vector<TrainingPair>& pairs,
                        const PipelineConfig& cfg) {
    const std::size_t bs = pairs.size();
    Tensor3<Real> xb(bs, cfg.frame_len, 1), tb(bs, cfg.frame_len, 1);
    for (std::size_t b = 0; b < bs; ++b) {
        for (std::size_t t = 0; t < cfg.frame_len; ++t) {
            xb.at(b, t, 0) = static_cast<Real>(pairs[b].input[t]);
            tb.at(b, t, 0) = static_cast<Real>(pairs[b].target[t]);
        }
    }
    ForwardTrace<Real> tr;
    const auto out = fcnn_forward(entry.model, xb, RunMode::train, &tr, true);
    auto [loss, grad] = mse_loss(out, tb);
    if (!std::isfinite(loss)) throw NumericFault("process_stream: non-finite adaptation loss");
    const auto grads = fcnn_backward(entry.model, tr, grad);
    adam_step(entry.model, grads, entry.adam);
    ++entry.steps_taken;
    pairs.clear();
}

template <typename Real>
std::vector<double> infer_frame(const FcnnModel<Real>& model, const std::vector<double>& frame) {
    Tensor3<Real> x(1, frame.size(), 1);
    for (std::size_t t = 0; t < frame.size(); ++t) x.at(0, t, 0) = static_cast<Real>(frame[t]);
    const auto y = fcnn_infer(model, x);
    std::vector<double> out(frame.size());
    for (std::size_t t = 0; t < frame.size(); ++t) out[t] = y.at(0, t, 0);
    return out;
}

} // namespace detail

// The field loop over one buffered stream: frame, average to mid, VAD, then
// either classify noise or denoise speech, buffering (left, right) training
// pairs per noise type while the switch is on. Output is the overlap-added
// denoised stream, same length as the input. With the switch off nothing in
// the model bank is touched.
template <typename Real>
std::vector<double> process_stream(PipelineState<Real>& st, const AudioBuffer& stream,
                                   std::vector<FrameTraceRow>* trace = nullptr) {
    const auto& cfg = st.cfg;
    if (stream.n_channels() == 0 || stream.n_samples() == 0)
        throw SizeError("process_stream: empty stream");
    if (cfg.train_switch && stream.n_channels() < 2)
        throw ConfigError("process_stream: training requires a stereo stream");
    if (stream.sample_rate != cfg.sample_rate)
        throw ConfigError("process_stream: sample rate does not match pipeline config");
    const std::size_t L = cfg.frame_len;
    const std::size_t hop = L / 2;
    const std::size_t n = stream.n_samples();
    if (n < L) throw SizeError("process_stream: stream shorter than one frame");
    const bool stereo = stream.n_channels() >= 2;

    // half a frame of silence on each side keeps every real sample in the
    // exact-COLA zone of the synthesis. Real frame i sits at extended index
    // i+1; the leading and trailing pad frames (primer and flush) are only
    // denoised, so the VAD, classifier, trainer and trace see real frames.
    const std::size_t n_frames = (n - L + hop - 1) / hop + 1;
    const std::size_t ext_frames = n_frames + 2;
    const std::size_t padded = (ext_frames - 1) * hop + L;
    std::vector<double> left(padded, 0.0);
    std::copy(stream.channel(0).begin(), stream.channel(0).end(),
              left.begin() + static_cast<std::ptrdiff_t>(hop));
    std::vector<double> right;
    if (stereo) {
        right.assign(padded, 0.0);
        std::copy(stream.channel(1).begin(), stream.channel(1).end(),
                  right.begin() + static_cast<std::ptrdiff_t>(hop));
    }

    const std::vector<double> w = hann_window(L);
    const auto grab = [&](const std::vector<double>& src, std::size_t j) {
        std::vector<double> f(L);
        for (std::size_t k = 0; k < L; ++k) f[k] = src[j * hop + k] * w[k];
        return f;
    };
    const auto mid_of = [&](const std::vector<double>& lf, std::size_t j) {
        if (!stereo) return lf;
        const auto rf = grab(right, j);
        std::vector<double> mid(L);
        for (std::size_t k = 0; k < L; ++k) mid[k] = 0.5 * (lf[k] + rf[k]);
        return mid;
    };
    const auto selected_model = [&]() -> const FcnnModel<Real>* {
        if (st.active_noise_type >= 0) {
            const auto it = st.bank.find(st.active_noise_type);
            if (it != st.bank.end()) return &it->second.model;
        }
        return &st.pretrained;
    };

    FrameSequence out_frames;
    out_frames.frame_len = L;
    out_frames.n_frames = ext_frames;
    out_frames.windowed = true;
    out_frames.source_len = padded;
    out_frames.frames.resize(ext_frames * L);

    const auto synth_frame = [&](std::size_t j) {
        const auto lf = grab(left, j);
        const auto mid = mid_of(lf, j);
        const auto& in_frame = (cfg.infer_mid || !stereo) ? mid : lf;
        const auto denoised = detail::infer_frame(*selected_model(), in_frame);
        std::copy(denoised.begin(), denoised.end(),
                  out_frames.frames.begin() + static_cast<std::ptrdiff_t>(j * L));
    };

    synth_frame(0);

    for (std::size_t i = 0; i < n_frames; ++i) {
        const auto lf = grab(left, i + 1);
        const auto mid = mid_of(lf, i + 1);

        const bool training = cfg.train_switch && i < cfg.switch_off_after;
        const VadDecision decision = vad_classify(mid, st.vad);
        if (decision == VadDecision::noise) {
            st.active_noise_type = classifier_step(st.clusters, noise_features(mid, cfg.sample_rate));
        } else if (training && st.active_noise_type >= 0) {
            const int id = st.active_noise_type;
            auto it = st.bank.find(id);
            if (it == st.bank.end()) {
                BankEntry<Real> entry{st.pretrained,
                                      AdamState<Real>::for_model(st.pretrained, cfg.learning_rate),
                                      0};
                it = st.bank.emplace(id, std::move(entry)).first;
            }
            auto& buf = st.pending[id];
            buf.push_back({lf, grab(right, i + 1), PairTag::n2n});
            if (buf.size() >= cfg.minibatch) {
                detail::pipeline_adam_step(it->second, buf, cfg);
                ++st.total_steps;
            }
        }

        synth_frame(i + 1);
        if (trace)
            trace->push_back({i, decision, st.active_noise_type, training, st.total_steps});
    }

    synth_frame(ext_frames - 1);

    const auto out = overlap_add(out_frames);
    return {out.begin() + static_cast<std::ptrdiff_t>(hop),
            out.begin() + static_cast<std::ptrdiff_t>(hop + n)};
}

inline void write_trace_csv(const std::vector<FrameTraceRow>& rows, std::ostream& out) {
    out << "frame,vad,noise_type,switch,steps\n";
    for (const auto& r : rows) {
        out << r.frame_index << ',' << (r.vad == VadDecision::speech ? "speech" : "noise") << ','
            << r.noise_type_id << ',' << (r.switch_on ? "on" : "off") << ',' << r.steps_taken
            << '\n';
    }
}

inline void write_trace_csv(const std::vector<FrameTraceRow>& rows,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open trace csv for writing: " + path.string());
    write_trace_csv(rows, out);
    if (!out) throw IoError("trace csv write failed: " + path.string());
}

} // namespace n2n
