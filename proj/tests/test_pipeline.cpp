#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "n2n/pipeline.hpp"
#include "n2n/rng.hpp"

using namespace n2n;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> white(std::size_t n, double amp, std::uint64_t seed) {
    std::vector<double> x(n);
    Rng rng(seed);
    for (auto& v : x) v = rng.uniform(-amp, amp);
    return x;
}

double frame_energy_db(std::span<const double> f) {
    double e = 0.0;
    for (double v : f) e += v * v;
    return 10.0 * std::log10(e / static_cast<double>(f.size()) + 1e-12);
}

ArchConfig tiny_arch() {
    ArchConfig a;
    a.conv_layers = 3;
    a.channels = 8;
    a.kernel = 9;
    return a;
}

// noise-led stereo stream: mid carries noise everywhere plus loud tones over
// [speech_from, speech_to) hops, side is an independent noise realization
AudioBuffer field_stream(std::size_t n_hops, std::size_t hop, std::size_t speech_from,
                         std::size_t speech_to, std::uint64_t seed, int rate = 48000) {
    const std::size_t n = n_hops * hop;
    const auto n_mid = white(n, 0.01, seed);
    const auto n_side = white(n, 0.01, seed + 1);
    std::vector<double> left(n), right(n);
    constexpr double pi = std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const std::size_t h = i / hop;
        if (h >= speech_from && h < speech_to) {
            const double t = static_cast<double>(i) / rate;
            s = 0.6 * std::sin(2.0 * pi * 300.0 * t) + 0.3 * std::sin(2.0 * pi * 700.0 * t);
        }
        const double mid = s + n_mid[i];
        left[i] = mid + n_side[i];
        right[i] = mid - n_side[i];
    }
    return AudioBuffer(std::move(left), std::move(right), rate);
}

} // namespace

TEST_CASE("vad calls zero and quiet frames noise") {
    VadState vad;
    const std::vector<double> zero(960, 0.0);
    for (int i = 0; i < 10; ++i) CHECK(vad_classify(zero, vad) == VadDecision::noise);
    CHECK_THROWS_AS(vad_classify(std::vector<double>{}, vad), SizeError);
}

TEST_CASE("vad flags a loud burst and holds through the hangover") {
    VadState vad;
    Rng rng(5);
    std::vector<double> quiet(480), burst(480);
    for (int i = 0; i < 100; ++i) {
        for (auto& v : quiet) v = rng.uniform(-0.01, 0.01);
        CHECK(vad_classify(quiet, vad) == VadDecision::noise);
    }
    // ~30 dB above the floor
    for (std::size_t i = 0; i < burst.size(); ++i)
        burst[i] = 0.3 * std::sin(0.05 * static_cast<double>(i));
    CHECK(vad_classify(burst, vad) == VadDecision::speech);

    for (auto& v : quiet) v = rng.uniform(-0.01, 0.01);
    for (int i = 0; i < 5; ++i) CHECK(vad_classify(quiet, vad) == VadDecision::speech);
    CHECK(vad_classify(quiet, vad) == VadDecision::noise);
    CHECK(vad.hangover_remaining == 0);
}

TEST_CASE("vad floor settles near the stationary noise level") {
    VadState vad;
    Rng rng(6);
    std::vector<double> frame(480);
    double mean_db = 0.0;
    const int frames = 400;
    for (int i = 0; i < frames; ++i) {
        for (auto& v : frame) v = rng.uniform(-0.1, 0.1);
        mean_db += frame_energy_db(frame);
        vad_classify(frame, vad);
    }
    mean_db /= frames;
    CAPTURE(vad.noise_floor_db, mean_db);
    CHECK(std::abs(vad.noise_floor_db - mean_db) <= 3.0);
}

TEST_CASE("noise features shift by one decade under 10x gain") {
    const auto frame = white(960, 0.2, 9);
    auto scaled = frame;
    for (auto& v : scaled) v *= 10.0;
    const auto fa = noise_features(frame);
    const auto fb = noise_features(scaled);
    for (std::size_t k = 0; k < fa.size(); ++k) CHECK_THAT(fb[k] - fa[k], WithinAbs(1.0, 1e-12));
}

TEST_CASE("noise features are flat for white and descending for low-pass noise") {
    NoiseFeature wh{}, lp{};
    Rng rng(10);
    std::vector<double> frame(960);
    const int frames = 99;
    for (int i = 0; i < frames; ++i) {
        for (auto& v : frame) v = rng.normal();
        const auto f = noise_features(frame);
        for (std::size_t k = 0; k < f.size(); ++k) wh[k] += f[k] / frames;
    }
    double y = 0.0;
    const double a = std::exp(-2.0 * std::numbers::pi * 150.0 / 48000.0);
    for (int i = 0; i < frames; ++i) {
        for (auto& v : frame) {
            y = (1.0 - a) * rng.normal() + a * y;
            v = y;
        }
        const auto f = noise_features(frame);
        for (std::size_t k = 0; k < f.size(); ++k) lp[k] += f[k] / frames;
    }
    const auto [wmin, wmax] = std::minmax_element(wh.begin(), wh.end());
    CAPTURE(wh, lp);
    CHECK(*wmax - *wmin < 1.5);
    for (std::size_t k = 0; k + 1 < lp.size(); ++k) CHECK(lp[k] > lp[k + 1]);
}

TEST_CASE("noise feature input validation") {
    CHECK_THROWS_AS(noise_features(std::vector<double>(63, 0.1)), SizeError);
    CHECK_THROWS_AS(noise_features(std::vector<double>(1025, 0.1)), SizeError);
    CHECK_NOTHROW(noise_features(std::vector<double>(64, 0.1)));
    CHECK_NOTHROW(noise_features(std::vector<double>(1024, 0.1)));
}

TEST_CASE("classifier spawns, assigns, and respects the cap") {
    NoiseClusterBank bank;
    NoiseFeature f0{};
    f0.fill(-2.0);
    CHECK(classifier_step(bank, f0) == 0);
    REQUIRE(bank.centroids.size() == 1);
    CHECK(bank.counts[0] == 1);

    // exact centroid: assigned there, EMA is a no-op at distance zero
    const auto before = bank.centroids[0];
    CHECK(classifier_step(bank, f0) == 0);
    CHECK(bank.centroids[0] == before);
    CHECK(bank.counts[0] == 2);

    // far-apart features spawn until the cap, then fall back to nearest
    for (int i = 1; i < 8; ++i) {
        NoiseFeature f{};
        f.fill(-2.0 + 3.0 * i);
        classifier_step(bank, f);
        CHECK(bank.centroids.size() <= bank.k_max);
    }
    CHECK(bank.centroids.size() == bank.k_max);
    NoiseFeature far{};
    far.fill(100.0);
    const auto snapshot = bank.centroids;
    CHECK(classifier_step(bank, far) == static_cast<int>(bank.k_max) - 1);
    CHECK(bank.centroids == snapshot);
}

TEST_CASE("classifier separates two noise types consistently") {
    NoiseClusterBank bank;
    Rng rng(11);
    std::vector<double> frame(960);
    std::vector<int> white_ids, lp_ids;
    double y = 0.0;
    const double a = std::exp(-2.0 * std::numbers::pi * 100.0 / 48000.0);
    for (int i = 0; i < 1000; ++i) {
        if (i % 2 == 0) {
            for (auto& v : frame) v = 0.2 * rng.normal();
            white_ids.push_back(classifier_step(bank, noise_features(frame)));
        } else {
            for (auto& v : frame) {
                y = (1.0 - a) * rng.normal() + a * y;
                v = 4.0 * y;
            }
            lp_ids.push_back(classifier_step(bank, noise_features(frame)));
        }
    }
    const auto consistency = [](const std::vector<int>& ids) {
        std::map<int, int> hist;
        for (int id : ids) ++hist[id];
        int top = 0;
        for (const auto& [id, c] : hist) top = std::max(top, c);
        return static_cast<double>(top) / static_cast<double>(ids.size());
    };
    CAPTURE(bank.centroids.size());
    CHECK(bank.centroids.size() <= bank.k_max);
    CHECK(consistency(white_ids) >= 0.95);
    CHECK(consistency(lp_ids) >= 0.95);
}

TEST_CASE("off mode leaves the model bank untouched and is repeatable") {
    const auto model = init_model<float>(3, tiny_arch());
    PipelineConfig cfg;
    cfg.frame_len = 256;
    cfg.train_switch = false;
    const auto stream = field_stream(120, 128, 40, 120, 21);

    auto st1 = make_pipeline(model, cfg);
    std::vector<FrameTraceRow> trace;
    const auto out1 = process_stream(st1, stream, &trace);
    CHECK(st1.bank.empty());
    CHECK(st1.pending.empty());
    CHECK(st1.total_steps == 0);
    CHECK(st1.pretrained.params == model.params);
    CHECK(st1.pretrained.buffers == model.buffers);
    CHECK(out1.size() == stream.n_samples());
    REQUIRE(trace.size() * 128 >= stream.n_samples() - 256);
    for (const auto& r : trace) {
        CHECK(!r.switch_on);
        CHECK(r.steps_taken == 0);
    }

    auto st2 = make_pipeline(model, cfg);
    const auto out2 = process_stream(st2, stream);
    CHECK(out1 == out2);
}

TEST_CASE("on mode adapts exactly one bank entry") {
    const auto model = init_model<float>(4, tiny_arch());
    PipelineConfig cfg;
    cfg.frame_len = 256;
    cfg.train_switch = true;
    // 60 noise hops to seed the floor and classifier, then enough speech
    // for a couple of minibatches
    const auto stream = field_stream(460, 128, 60, 460, 22);

    auto st = make_pipeline(model, cfg);
    std::vector<FrameTraceRow> trace;
    const auto out = process_stream(st, stream, &trace);
    CHECK(out.size() == stream.n_samples());
    for (double v : out) REQUIRE(std::isfinite(v));

    CHECK(st.total_steps >= 1);
    std::size_t adapted = 0;
    for (const auto& [id, entry] : st.bank) {
        if (entry.steps_taken > 0) {
            ++adapted;
            CHECK(entry.model.params != model.params);
            CHECK(entry.adam.t == entry.steps_taken);
        } else {
            CHECK(entry.model.params == model.params);
        }
    }
    CHECK(adapted == 1);
    CHECK(st.clusters.centroids.size() <= cfg.k_max);
    CHECK(trace.back().steps_taken == st.total_steps);
}

TEST_CASE("on mode without speech takes no steps") {
    const auto model = init_model<float>(5, tiny_arch());
    PipelineConfig cfg;
    cfg.frame_len = 256;
    cfg.train_switch = true;
    const auto stream = field_stream(100, 128, 100, 100, 23); // noise only
    auto st = make_pipeline(model, cfg);
    process_stream(st, stream);
    CHECK(st.total_steps == 0);
    for (const auto& [id, entry] : st.bank) CHECK(entry.steps_taken == 0);
}

TEST_CASE("process_stream input validation") {
    const auto model = init_model<float>(6, tiny_arch());
    PipelineConfig cfg;
    cfg.frame_len = 256;
    cfg.train_switch = true;
    auto st = make_pipeline(model, cfg);
    const AudioBuffer mono(white(4096, 0.1, 30), 48000);
    CHECK_THROWS_AS(process_stream(st, mono), ConfigError);

    cfg.train_switch = false;
    auto st2 = make_pipeline(model, cfg);
    const AudioBuffer wrong_rate(white(4096, 0.1, 31), 16000);
    CHECK_THROWS_AS(process_stream(st2, wrong_rate), ConfigError);
    const AudioBuffer tiny(white(100, 0.1, 32), 48000);
    CHECK_THROWS_AS(process_stream(st2, tiny), SizeError);

    cfg.minibatch = 0;
    CHECK_THROWS_AS(make_pipeline(model, cfg), ConfigError);
    cfg.minibatch = 128;
    cfg.k_max = 0;
    CHECK_THROWS_AS(make_pipeline(model, cfg), ConfigError);
}

TEST_CASE("trace csv shape") {
    std::vector<FrameTraceRow> rows = {
        {0, VadDecision::noise, -1, false, 0},
        {1, VadDecision::speech, 2, true, 3},
    };
    std::ostringstream out;
    write_trace_csv(rows, out);
    CHECK(out.str() == "frame,vad,noise_type,switch,steps\n"
                       "0,noise,-1,off,0\n"
                       "1,speech,2,on,3\n");
}
