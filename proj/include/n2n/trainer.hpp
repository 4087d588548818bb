#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "n2n/adam.hpp"
#include "n2n/audio.hpp"
#include "n2n/dsp.hpp"
#include "n2n/error.hpp"
#include "n2n/model.hpp"
#include "n2n/rng.hpp"

namespace n2n {

enum class PairTag { supervised, n2n };

// One (input frame, target frame) example; both sides carry the same Hann
// weighting, so the learned map is frame-to-frame and OLA synthesis divides
// the window back out.
struct TrainingPair {
    std::vector<double> input;
    std::vector<double> target;
    PairTag tag = PairTag::supervised;
};

struct TrainConfig {
    std::size_t minibatch = 128;
    double learning_rate = 0.0004;
    std::size_t epochs = 25;
    std::size_t frame_len = 960;
    std::uint64_t seed = 0;
    bool shuffle = true;
    int sample_rate = 48000;

    void validate() const {
        if (minibatch < 1) throw ConfigError("minibatch must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (frame_len < 2 || frame_len % 2 != 0)
            throw ConfigError("frame_len must be even and >= 2");
    }
};

namespace detail {

inline void check_aligned(const AudioBuffer& a, const AudioBuffer& b) {
    if (a.n_channels() != 1 || b.n_channels() != 1)
        throw ConfigError("training inputs must be mono (select a channel first)");
    if (a.sample_rate != b.sample_rate)
        throw ConfigError("training inputs must share a sample rate");
    if (a.n_samples() != b.n_samples())
        throw AlignmentError("training inputs must have equal length");
}

} // namespace detail

// Aligned windowed frames of noisy (input) and clean (target).
inline std::vector<TrainingPair> make_pairs_supervised(const AudioBuffer& noisy,
                                                       const AudioBuffer& clean,
                                                       const TrainConfig& cfg) {
    cfg.validate();
    detail::check_aligned(noisy, clean);
    const auto fin = frame_signal(noisy.channels[0], cfg.frame_len, true);
    const auto ftg = frame_signal(clean.channels[0], cfg.frame_len, true);
    std::vector<TrainingPair> pairs(fin.n_frames);
    for (std::size_t i = 0; i < fin.n_frames; ++i) {
        const auto a = fin.frame(i);
        const auto b = ftg.frame(i);
        pairs[i].input.assign(a.begin(), a.end());
        pairs[i].target.assign(b.begin(), b.end());
        pairs[i].tag = PairTag::supervised;
    }
    return pairs;
}

// Pairs of two noisy realizations of the same speech. With swap on, each
// pair's roles are exchanged with probability 1/2 (seeded); the channels are
// symmetric so this halves any role bias.
inline std::vector<TrainingPair> make_pairs_n2n(const AudioBuffer& y, const AudioBuffer& y_prime,
                                                const TrainConfig& cfg, bool swap = true) {
    cfg.validate();
    detail::check_aligned(y, y_prime);
    const auto fa = frame_signal(y.channels[0], cfg.frame_len, true);
    const auto fb = frame_signal(y_prime.channels[0], cfg.frame_len, true);
    Rng rng(mix_seed(cfg.seed, 0x5741505341ULL));
    std::vector<TrainingPair> pairs(fa.n_frames);
    for (std::size_t i = 0; i < fa.n_frames; ++i) {
        const bool flip = swap && rng.bernoulli(0.5);
        const auto in = flip ? fb.frame(i) : fa.frame(i);
        const auto tg = flip ? fa.frame(i) : fb.frame(i);
        pairs[i].input.assign(in.begin(), in.end());
        pairs[i].target.assign(tg.begin(), tg.end());
        pairs[i].tag = PairTag::n2n;
    }
    return pairs;
}

// Minibatch SGD over the pairs: per epoch a seeded shuffle, then forward
// (train-mode BN), MSE, backward, Adam on each batch of at most
// cfg.minibatch pairs (the last short batch is kept). Returns the per-epoch
// mean loss. learning_rate 0 is a dry run: losses are computed but neither
// parameters nor batch-norm running statistics move.
template <typename Real>
std::vector<double> train(FcnnModel<Real>& model, AdamState<Real>& adam,
                          const std::vector<TrainingPair>& pairs, const TrainConfig& cfg) {
    cfg.validate();
    if (pairs.empty()) throw SizeError("train: no training pairs");
    for (const auto& p : pairs)
        if (p.input.size() != cfg.frame_len || p.target.size() != cfg.frame_len)
            throw ShapeError("train: pair length does not match cfg.frame_len");
    adam.lr = cfg.learning_rate;
    const bool dry = cfg.learning_rate == 0.0;

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> trace;
    trace.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            Rng rng(mix_seed(cfg.seed, epoch + 1));
            rng.shuffle(order);
        }
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
            const std::size_t bs = std::min(cfg.minibatch, order.size() - start);
            Tensor3<Real> xb(bs, cfg.frame_len, 1), tb(bs, cfg.frame_len, 1);
            for (std::size_t b = 0; b < bs; ++b) {
                const auto& p = pairs[order[start + b]];
                for (std::size_t t = 0; t < cfg.frame_len; ++t) {
                    xb.at(b, t, 0) = static_cast<Real>(p.input[t]);
                    tb.at(b, t, 0) = static_cast<Real>(p.target[t]);
                }
            }
            ForwardTrace<Real> tr;
            const auto out = fcnn_forward(model, xb, RunMode::train, &tr, !dry);
            auto [loss, grad] = mse_loss(out, tb);
            if (!std::isfinite(loss)) throw NumericFault("train: non-finite loss");
            loss_sum += loss * static_cast<double>(bs);
            if (!dry) {
                const auto grads = fcnn_backward(model, tr, grad);
                adam_step(model, grads, adam);
            }
        }
        trace.push_back(loss_sum / static_cast<double>(pairs.size()));
    }
    return trace;
}

// Convenience form with a fresh optimizer.
template <typename Real>
std::pair<std::vector<double>, AdamState<Real>> train(FcnnModel<Real>& model,
                                                      const std::vector<TrainingPair>& pairs,
                                                      const TrainConfig& cfg) {
    auto adam = AdamState<Real>::for_model(model, cfg.learning_rate);
    auto trace = train(model, adam, pairs, cfg);
    return {std::move(trace), std::move(adam)};
}

// Self-supervised adaptation from a supervised starting point: train on the
// n2n-tagged pairs only, from a fresh optimizer. No pairs means nothing to
// adapt to, so the starting model comes back unchanged.
template <typename Real>
FcnnModel<Real> train_hybrid(const FcnnModel<Real>& model0, const std::vector<TrainingPair>& pairs,
                             const TrainConfig& cfg, std::vector<double>* trace_out = nullptr) {
    std::vector<TrainingPair> n2n_only;
    for (const auto& p : pairs)
        if (p.tag == PairTag::n2n) n2n_only.push_back(p);
    FcnnModel<Real> model = model0;
    if (n2n_only.empty()) {
        if (trace_out) trace_out->clear();
        return model;
    }
    auto [trace, adam] = train(model, n2n_only, cfg);
    if (trace_out) *trace_out = std::move(trace);
    return model;
}

// Whole-signal denoising: window, frame, run the network in inference mode,
// overlap-add, trim. The tail is zero-padded so every input sample is
// covered by a frame; output length equals input length.
template <typename Real>
AudioBuffer denoise_signal(const FcnnModel<Real>& model, const AudioBuffer& noisy,
                           const TrainConfig& cfg) {
    cfg.validate();
    if (noisy.n_channels() != 1)
        throw ConfigError("denoise_signal: mono input required (select a channel first)");
    if (noisy.sample_rate != cfg.sample_rate)
        throw ConfigError("denoise_signal: sample rate does not match the training rate");
    const std::size_t len = noisy.n_samples();
    const std::size_t L = cfg.frame_len, hop = L / 2;
    if (len < L) throw SizeError("denoise_signal: input shorter than one frame");

    // half a frame of silence on each side keeps every real sample in the
    // exact-COLA zone of the synthesis; the network's output at the stream
    // edges lands in the discarded margin instead of being divided by a
    // vanishing window sum
    const std::size_t n_frames = (len + hop - 1) / hop + 1;
    std::vector<double> x((n_frames - 1) * hop + L, 0.0);
    std::copy(noisy.channels[0].begin(), noisy.channels[0].end(),
              x.begin() + static_cast<std::ptrdiff_t>(hop));

    FrameSequence fs = frame_signal(x, L, true);
    // inference is frame-independent, so chunking the batch only bounds memory
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < fs.n_frames; start += chunk) {
        const std::size_t bs = std::min(chunk, fs.n_frames - start);
        Tensor3<Real> xb(bs, L, 1);
        for (std::size_t b = 0; b < bs; ++b) {
            const auto f = fs.frame(start + b);
            for (std::size_t t = 0; t < L; ++t) xb.at(b, t, 0) = static_cast<Real>(f[t]);
        }
        const auto out = fcnn_infer(model, xb);
        for (std::size_t b = 0; b < bs; ++b) {
            auto f = fs.frame(start + b);
            for (std::size_t t = 0; t < L; ++t) f[t] = static_cast<double>(out.at(b, t, 0));
        }
    }
    const std::vector<double> y = overlap_add(fs);
    AudioBuffer out;
    out.sample_rate = noisy.sample_rate;
    out.channels.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(hop),
                              y.begin() + static_cast<std::ptrdiff_t>(hop + len));
    return out;
}

} // namespace n2n
