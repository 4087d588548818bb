#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "corpus.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"
#include "wiener.hpp"

namespace n2n {

inline std::vector<double> select_channel(const AudioBuffer& buf, const std::string& channel) {
    if (channel == "left") return buf.channel(0);
    if (channel == "right") {
        if (buf.n_channels() < 2) throw ConfigError("channel right requested on a mono file");
        return buf.channel(1);
    }
    if (channel == "mid") return mixdown(buf);
    throw ConfigError("unknown channel: " + channel + " (expected left, right, or mid)");
}

namespace detail {

inline TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig tc;
    tc.frame_len = cfg.size("frame_len");
    tc.minibatch = cfg.size("minibatch");
    tc.learning_rate = cfg.num("lr");
    tc.epochs = cfg.size("epochs");
    tc.seed = cfg.u64("seed");
    tc.sample_rate = static_cast<int>(cfg.num("sample_rate"));
    return tc;
}

inline ArchConfig arch_from(const RunConfig& cfg) {
    ArchConfig a;
    a.conv_layers = static_cast<std::uint32_t>(cfg.size("conv_layers"));
    a.channels = static_cast<std::uint32_t>(cfg.size("channels"));
    a.kernel = static_cast<std::uint32_t>(cfg.size("kernel"));
    return a;
}

inline CorpusConfig corpus_config_from(const RunConfig& cfg, const std::filesystem::path& out) {
    CorpusConfig c;
    c.n_utterances = cfg.size("n_utterances");
    c.noises.clear();
    for (const auto& s : cfg.str_list("noises")) c.noises.push_back(noise_kind_from_string(s));
    c.snrs_db = cfg.num_list("snrs_db");
    const auto& mode = cfg.str("pair_mode");
    if (mode == "independent")
        c.mode = PairMode::independent;
    else if (mode == "midside")
        c.mode = PairMode::midside;
    else
        throw ConfigError("unknown pair_mode: " + mode);
    c.speaker.length_s = cfg.num("utterance_s");
    c.speaker.sample_rate = static_cast<int>(cfg.num("sample_rate"));
    c.speaker.f0_min_hz = cfg.num("f0_min_hz");
    c.speaker.f0_max_hz = cfg.num("f0_max_hz");
    c.seed = cfg.u64("seed");
    c.out_dir = out.string();
    return c;
}

struct ConditionPair {
    const ManifestEntry* input = nullptr;   // noisy_a or stereo_l
    const ManifestEntry* partner = nullptr; // matching noisy_b or stereo_r
    const ManifestEntry* clean = nullptr;
};

inline std::vector<ConditionPair> condition_pairs(const DatasetManifest& m, Split split) {
    std::vector<ConditionPair> out;
    for (const auto& e : m.entries) {
        if (e.split != split) continue;
        Role partner_role;
        if (e.role == Role::noisy_a)
            partner_role = Role::noisy_b;
        else if (e.role == Role::stereo_l)
            partner_role = Role::stereo_r;
        else
            continue;
        ConditionPair cp;
        cp.input = &e;
        for (const auto& o : m.entries) {
            if (o.id != e.id) continue;
            if (o.role == partner_role && o.noise == e.noise && o.snr_db == e.snr_db)
                cp.partner = &o;
            if (o.role == Role::clean) cp.clean = &o;
        }
        if (!cp.partner || !cp.clean)
            throw FormatError("manifest entry " + e.path + " is missing its partner or clean file");
        out.push_back(cp);
    }
    return out;
}

inline AudioBuffer load_entry(const DatasetManifest& m, const ManifestEntry& e) {
    return read_wav(std::filesystem::path(m.root) / e.path);
}

// training material from a manifest's split: supervised pairs map each noisy
// file to its clean reference, n2n pairs map realization a to realization b
inline std::vector<TrainingPair> manifest_pairs(const DatasetManifest& m, const TrainConfig& tc,
                                                PairTag tag, Split split) {
    std::vector<TrainingPair> pairs;
    std::size_t file_idx = 0;
    for (const auto& cp : condition_pairs(m, split)) {
        TrainConfig per_file = tc;
        per_file.seed = mix_seed(tc.seed, file_idx++);
        const auto input = load_entry(m, *cp.input);
        if (tag == PairTag::supervised) {
            const auto clean = load_entry(m, *cp.clean);
            const auto p = make_pairs_supervised(input, clean, per_file);
            pairs.insert(pairs.end(), p.begin(), p.end());
        } else {
            const auto partner = load_entry(m, *cp.partner);
            const auto p = make_pairs_n2n(input, partner, per_file);
            pairs.insert(pairs.end(), p.begin(), p.end());
        }
    }
    return pairs;
}

// noise statistics for the Wiener baseline: the quietest tenth of the frames
inline std::vector<double> wiener_baseline(std::span<const double> noisy, std::size_t frame_len) {
    const auto fs = frame_signal(noisy, frame_len, true);
    std::vector<std::size_t> order(fs.n_frames);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> energy(fs.n_frames);
    for (std::size_t i = 0; i < fs.n_frames; ++i) {
        double e = 0.0;
        for (double v : fs.frame(i)) e += v * v;
        energy[i] = e;
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });
    const std::size_t keep = std::max<std::size_t>(1, fs.n_frames / 10);
    FrameSequence quiet;
    quiet.frame_len = fs.frame_len;
    quiet.n_frames = keep;
    quiet.windowed = true;
    quiet.source_len = fs.source_len;
    quiet.frames.resize(keep * fs.frame_len);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto f = fs.frame(order[i]);
        std::copy(f.begin(), f.end(), quiet.frames.begin() + static_cast<std::ptrdiff_t>(i * fs.frame_len));
    }
    return wiener_denoise(noisy, quiet);
}

} // namespace detail

// Builds the synthetic dataset, applies the utterance-level split, and echoes
// the resolved config. Returns the split manifest.
inline DatasetManifest cmd_gen_corpus(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto manifest = build_dataset(detail::corpus_config_from(cfg, out_dir));
    manifest = split_dataset(manifest, cfg.num("test_fraction"),
                             mix_seed(cfg.u64("seed"), 0x53504C4954ULL));
    write_manifest(manifest, out_dir / "manifest.jsonl");
    cfg.write(out_dir / "config.txt");
    return manifest;
}

struct TrainOutputs {
    std::filesystem::path model_file;
    std::filesystem::path loss_csv;
};

// Trains on the manifest's train split. Modes: ssd (noisy -> clean), n2n
// (noisy -> second noisy realization), hsd (n2n adaptation of a supervised
// init, which must be supplied via init_path). Any mode accepts init_path as
// the starting point instead of a fresh random init.
inline TrainOutputs cmd_train(const RunConfig& cfg, const std::string& mode,
                              const std::filesystem::path& manifest_path,
                              const std::optional<std::filesystem::path>& init_path,
                              const std::filesystem::path& out_dir) {
    if (mode != "ssd" && mode != "n2n" && mode != "hsd")
        throw ConfigError("unknown training mode: " + mode + " (expected ssd, n2n, or hsd)");
    std::filesystem::create_directories(out_dir);
    const auto manifest = read_manifest(manifest_path);
    const TrainConfig tc = detail::train_config_from(cfg);

    FcnnModel<float> model = init_path ? load_model<float>(*init_path).model
                                       : init_model<float>(tc.seed, detail::arch_from(cfg));

    std::vector<double> losses;
    if (mode == "hsd") {
        if (!init_path) throw ConfigError("hsd training needs a supervised init model");
        const auto pairs = detail::manifest_pairs(manifest, tc, PairTag::n2n, Split::train);
        model = train_hybrid(model, pairs, tc, &losses);
    } else {
        const PairTag tag = mode == "ssd" ? PairTag::supervised : PairTag::n2n;
        const auto pairs = detail::manifest_pairs(manifest, tc, tag, Split::train);
        losses = train(model, pairs, tc).first;
    }

    TrainOutputs out{out_dir / "model.n2nf", out_dir / "loss.csv"};
    save_model(model, out.model_file);
    {
        std::ofstream csv(out.loss_csv);
        if (!csv) throw IoError("cannot write loss csv: " + out.loss_csv.string());
        csv << "epoch,mean_loss\n";
        char row[64];
        for (std::size_t i = 0; i < losses.size(); ++i) {
            std::snprintf(row, sizeof row, "%zu,%.9g\n", i + 1, losses[i]);
            csv << row;
        }
    }
    cfg.write(out_dir / "config.txt");
    return out;
}

// Denoises one channel of a WAV with a trained model; output length matches
// the input.
inline std::filesystem::path cmd_denoise(const RunConfig& cfg,
                                         const std::filesystem::path& model_path,
                                         const std::filesystem::path& wav_path,
                                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto loaded = load_model<float>(model_path);
    const auto buf = read_wav(wav_path);
    auto x = select_channel(buf, cfg.str("channel"));
    TrainConfig tc = detail::train_config_from(cfg);
    tc.sample_rate = buf.sample_rate;
    const auto out = denoise_signal(loaded.model, AudioBuffer(std::move(x), buf.sample_rate), tc);
    const auto out_path = out_dir / "denoised.wav";
    write_wav(out_path, out, WavEncoding::float32);
    cfg.write(out_dir / "config.txt");
    return out_path;
}

struct EvalSelection {
    std::optional<std::filesystem::path> ssd_model;
    std::optional<std::filesystem::path> hsd_model;
    bool wiener = false;
};

// Scores the manifest's test split: always the raw noisy input (x+n), plus
// the Wiener baseline and any supplied models. Emits metrics.csv.
inline MetricsReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                              const EvalSelection& sel, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto manifest = read_manifest(manifest_path);
    const auto conditions = detail::condition_pairs(manifest, Split::test);
    if (conditions.empty()) throw SizeError("cmd_eval: manifest has no test-split noisy entries");

    std::optional<FcnnModel<float>> ssd, hsd;
    if (sel.ssd_model) ssd = load_model<float>(*sel.ssd_model).model;
    if (sel.hsd_model) hsd = load_model<float>(*sel.hsd_model).model;

    TrainConfig tc = detail::train_config_from(cfg);
    const auto frame_len = tc.frame_len;
    std::vector<MetricsRecord> records;
    for (const auto& cp : conditions) {
        const auto clean_buf = detail::load_entry(manifest, *cp.clean);
        const auto noisy_buf = detail::load_entry(manifest, *cp.input);
        const auto& clean = clean_buf.channel(0);
        const auto& noisy = noisy_buf.channel(0);
        const int rate = noisy_buf.sample_rate;
        const auto noise_name = std::string(to_string(*cp.input->noise));
        const double snr = *cp.input->snr_db;

        const auto score = [&](const std::string& system, const std::vector<double>& processed) {
            records.push_back(compute_metrics(cp.input->path, noise_name, system, snr, clean,
                                              processed, rate));
        };
        score("x+n", noisy);
        if (sel.wiener) score("wiener", detail::wiener_baseline(noisy, frame_len));
        tc.sample_rate = rate;
        if (ssd) {
            const auto d = denoise_signal(*ssd, AudioBuffer(noisy, rate), tc);
            score("ssd", d.channel(0));
        }
        if (hsd) {
            const auto d = denoise_signal(*hsd, AudioBuffer(noisy, rate), tc);
            score("hsd", d.channel(0));
        }
    }
    const auto report = evaluate(std::move(records));
    write_metrics_csv(report, out_dir / "metrics.csv");
    cfg.write(out_dir / "config.txt");
    return report;
}

// Runs the deployment loop over a stereo stream (a WAV file, or every stereo
// pair of a manifest concatenated in order) with the training switch on for
// the first switch_frames frames. Writes the denoised stream and the
// per-frame trace.
inline std::vector<FrameTraceRow> cmd_field_sim(const RunConfig& cfg,
                                                const std::filesystem::path& stream_path,
                                                const std::filesystem::path& model_path,
                                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    AudioBuffer stream;
    if (stream_path.extension() == ".jsonl") {
        const auto manifest = read_manifest(stream_path);
        std::vector<double> left, right;
        for (const auto& e : manifest.entries) {
            if (e.role != Role::stereo_l) continue;
            for (const auto& o : manifest.entries) {
                if (o.id == e.id && o.role == Role::stereo_r && o.noise == e.noise &&
                    o.snr_db == e.snr_db) {
                    const auto lb = detail::load_entry(manifest, e);
                    const auto rb = detail::load_entry(manifest, o);
                    left.insert(left.end(), lb.channel(0).begin(), lb.channel(0).end());
                    right.insert(right.end(), rb.channel(0).begin(), rb.channel(0).end());
                    stream.sample_rate = lb.sample_rate;
                }
            }
        }
        if (left.empty()) throw ConfigError("field-sim manifest has no stereo pairs");
        stream.channels = {std::move(left), std::move(right)};
    } else {
        stream = read_wav(stream_path);
    }

    const auto loaded = load_model<float>(model_path);
    PipelineConfig pc;
    pc.frame_len = cfg.size("frame_len");
    pc.sample_rate = stream.sample_rate;
    const auto switch_frames = cfg.size("switch_frames");
    pc.train_switch = switch_frames > 0;
    pc.switch_off_after = switch_frames;
    pc.minibatch = cfg.size("minibatch");
    pc.learning_rate = cfg.num("lr");
    pc.k_max = cfg.size("k_max");
    pc.spawn_threshold = cfg.num("tau");
    pc.vad_offset_db = cfg.num("vad_offset_db");
    const auto& channel = cfg.str("channel");
    if (channel == "mid")
        pc.infer_mid = true;
    else if (channel != "left")
        throw ConfigError("field-sim channel must be left or mid, got " + channel);

    auto st = make_pipeline(loaded.model, pc);
    std::vector<FrameTraceRow> trace;
    const auto out = process_stream(st, stream, &trace);
    write_wav(out_dir / "denoised.wav", AudioBuffer(out, stream.sample_rate),
              WavEncoding::float32);
    write_trace_csv(trace, out_dir / "trace.csv");
    cfg.write(out_dir / "config.txt");
    return trace;
}

} // namespace n2n
