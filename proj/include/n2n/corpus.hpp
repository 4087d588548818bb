#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dsp.hpp"
#include "error.hpp"
#include "noise_gen.hpp"
#include "rng.hpp"
#include "speech_gen.hpp"
#include "wav.hpp"

namespace n2n {

enum class Role { clean, noisy_a, noisy_b, stereo_l, stereo_r };
enum class Split { train, test };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::clean: return "clean";
        case Role::noisy_a: return "noisy_a";
        case Role::noisy_b: return "noisy_b";
        case Role::stereo_l: return "stereo_l";
        case Role::stereo_r: return "stereo_r";
    }
    throw ConfigError("unknown role value");
}

inline Role role_from_string(std::string_view s) {
    if (s == "clean") return Role::clean;
    if (s == "noisy_a") return Role::noisy_a;
    if (s == "noisy_b") return Role::noisy_b;
    if (s == "stereo_l") return Role::stereo_l;
    if (s == "stereo_r") return Role::stereo_r;
    throw FormatError("unknown role: " + std::string(s));
}

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw FormatError("unknown split: " + std::string(s));
}

// One file of the dataset. `id` names the utterance, so the clean entry and
// every noisy/stereo entry derived from it share the same id; `seed` is the
// generator seed that reproduces the entry's waveform.
struct ManifestEntry {
    std::string id;
    Role role = Role::clean;
    std::string path; // relative to the manifest's directory
    std::optional<NoiseKind> noise;
    std::optional<double> snr_db;
    Split split = Split::train;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::string root;
    std::vector<ManifestEntry> entries;
};

enum class PairMode { independent, midside };

struct CorpusConfig {
    std::size_t n_utterances = 10;
    std::vector<NoiseKind> noises{NoiseKind::white};
    std::vector<double> snrs_db{-5.0, 0.0, 5.0};
    PairMode mode = PairMode::independent;
    SpeechGenParams speaker{}; // per-utterance seeds are derived from `seed`
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct MidSidePair {
    std::vector<double> left, right, mid, side;
};

// Eq.-style stereo construction: mid = clean + noise at the requested SNR,
// side = the second noise scaled to the mid noise's power, L/R = M +- S.
inline MidSidePair make_midside_pair(std::span<const double> clean,
                                     std::span<const double> noise_mid,
                                     std::span<const double> noise_side, double snr_db) {
    auto [mid, scaled_mid_noise] = mix_at_snr(clean, noise_mid, snr_db);
    if (noise_side.size() < clean.size())
        throw SizeError("make_midside_pair: side noise shorter than clean");
    double pm = 0.0, ps = 0.0;
    for (double v : scaled_mid_noise) pm += v * v;
    for (std::size_t i = 0; i < clean.size(); ++i) ps += noise_side[i] * noise_side[i];
    if (ps == 0.0) throw DegenerateSignalError("make_midside_pair: silent side noise");
    const double g = std::sqrt(pm / ps);
    std::vector<double> side(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) side[i] = g * noise_side[i];
    auto [left, right] = mid_side_compose(mid, side);
    return {std::move(left), std::move(right), std::move(mid), std::move(side)};
}

namespace detail {

inline std::string utterance_id(std::size_t u) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "utt%03zu", u);
    return buf;
}

inline std::string snr_tag(double snr_db) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr_db);
    std::string s(buf);
    for (auto& c : s) {
        if (c == '-') c = 'm';
        if (c == '.') c = 'p';
    }
    return "snr" + s;
}

} // namespace detail

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open manifest for writing: " + path.string());
    for (const auto& e : m.entries) {
        nlohmann::json j;
        j["id"] = e.id;
        j["role"] = to_string(e.role);
        j["path"] = e.path;
        if (e.noise) j["noise"] = to_string(*e.noise);
        if (e.snr_db) j["snr_db"] = *e.snr_db;
        j["split"] = to_string(e.split);
        j["seed"] = e.seed;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("manifest write failed: " + path.string());
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    DatasetManifest m;
    m.root = path.parent_path().string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            ManifestEntry e;
            e.id = j.at("id").get<std::string>();
            e.role = role_from_string(j.at("role").get<std::string>());
            e.path = j.at("path").get<std::string>();
            if (j.contains("noise")) e.noise = noise_kind_from_string(j["noise"].get<std::string>());
            if (j.contains("snr_db")) e.snr_db = j["snr_db"].get<double>();
            e.split = split_from_string(j.at("split").get<std::string>());
            e.seed = j.at("seed").get<std::uint64_t>();
            m.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return m;
}

// Generates clean utterances plus, per noise kind and SNR, either a pair of
// independently-noised copies or a mid/side stereo pair. Writes float32 WAVs
// and manifest.jsonl under cfg.out_dir; entries default to the train split.
inline DatasetManifest build_dataset(const CorpusConfig& cfg) {
    if (cfg.n_utterances == 0) throw ConfigError("build_dataset: zero utterances");
    if (cfg.noises.empty() || cfg.snrs_db.empty())
        throw ConfigError("build_dataset: empty noise or snr list");
    if (cfg.out_dir.empty()) throw ConfigError("build_dataset: no output directory");
    const std::filesystem::path root(cfg.out_dir);
    std::filesystem::create_directories(root);

    DatasetManifest m;
    m.root = root.string();
    const int rate = cfg.speaker.sample_rate;

    for (std::size_t u = 0; u < cfg.n_utterances; ++u) {
        const std::string id = detail::utterance_id(u);
        SpeechGenParams sp = cfg.speaker;
        sp.seed = mix_seed(cfg.seed, u);
        const AudioBuffer clean = gen_speech(sp);
        const auto& x = clean.channel(0);

        const std::string clean_path = id + "_clean.wav";
        write_wav(root / clean_path, clean, WavEncoding::float32);
        m.entries.push_back({id, Role::clean, clean_path, {}, {}, Split::train, sp.seed});

        for (std::size_t ni = 0; ni < cfg.noises.size(); ++ni) {
            const NoiseKind kind = cfg.noises[ni];
            for (std::size_t si = 0; si < cfg.snrs_db.size(); ++si) {
                const double snr = cfg.snrs_db[si];
                const std::uint64_t cond = (static_cast<std::uint64_t>(u) << 12) |
                                           (static_cast<std::uint64_t>(ni) << 6) | si;
                const std::uint64_t seed_a = mix_seed(mix_seed(cfg.seed, cond), 1);
                const std::uint64_t seed_b = mix_seed(mix_seed(cfg.seed, cond), 2);
                const std::string base = id + "_" + to_string(kind) + "_" + detail::snr_tag(snr);

                const auto na = gen_noise(kind, x.size(), seed_a, rate);
                const auto nb = gen_noise(kind, x.size(), seed_b, rate);
                if (cfg.mode == PairMode::independent) {
                    auto [ya, na_scaled] = mix_at_snr(x, na.channel(0), snr);
                    auto [yb, nb_scaled] = mix_at_snr(x, nb.channel(0), snr);
                    const std::string pa = base + "_a.wav", pb = base + "_b.wav";
                    write_wav(root / pa, AudioBuffer(std::move(ya), rate), WavEncoding::float32);
                    write_wav(root / pb, AudioBuffer(std::move(yb), rate), WavEncoding::float32);
                    m.entries.push_back({id, Role::noisy_a, pa, kind, snr, Split::train, seed_a});
                    m.entries.push_back({id, Role::noisy_b, pb, kind, snr, Split::train, seed_b});
                } else {
                    auto pair = make_midside_pair(x, na.channel(0), nb.channel(0), snr);
                    const std::string pl = base + "_l.wav", pr = base + "_r.wav";
                    write_wav(root / pl, AudioBuffer(std::move(pair.left), rate),
                              WavEncoding::float32);
                    write_wav(root / pr, AudioBuffer(std::move(pair.right), rate),
                              WavEncoding::float32);
                    m.entries.push_back({id, Role::stereo_l, pl, kind, snr, Split::train, seed_a});
                    m.entries.push_back({id, Role::stereo_r, pr, kind, snr, Split::train, seed_b});
                }
            }
        }
    }
    write_manifest(m, root / "manifest.jsonl");
    return m;
}

// Utterance-level split: every entry sharing an id lands on the same side.
inline DatasetManifest split_dataset(const DatasetManifest& m, double test_fraction,
                                     std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("split_dataset: fraction must be in (0, 1)");
    std::vector<std::string> ids;
    for (const auto& e : m.entries)
        if (std::find(ids.begin(), ids.end(), e.id) == ids.end()) ids.push_back(e.id);
    Rng rng(seed);
    rng.shuffle(ids);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(ids.size())));
    n_test = std::min(n_test, ids.size());
    std::vector<std::string> test_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    DatasetManifest out = m;
    for (auto& e : out.entries) {
        const bool is_test =
            std::find(test_ids.begin(), test_ids.end(), e.id) != test_ids.end();
        e.split = is_test ? Split::test : Split::train;
    }
    return out;
}

} // namespace n2n
