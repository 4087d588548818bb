#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "n2n/corpus.hpp"
#include "n2n/fft.hpp"

using namespace n2n;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("n2n_corpus_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double band_energy_fraction(const std::vector<double>& x, int rate, double below_hz) {
    const std::size_t n_fft = next_pow2(x.size());
    const auto spec = rfft(x, n_fft);
    double below = 0.0, total = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double e = std::norm(spec[k]);
        total += e;
        if (static_cast<double>(k) * rate / static_cast<double>(n_fft) < below_hz) below += e;
    }
    return below / total;
}

} // namespace

TEST_CASE("gen_speech is deterministic and peak-normalized") {
    SpeechGenParams p;
    p.seed = 7;
    const auto a = gen_speech(p);
    const auto b = gen_speech(p);
    REQUIRE(a.n_samples() == 48000);
    CHECK(a.channel(0) == b.channel(0));
    CHECK(a.peak() == 1.0);
    CHECK(a.all_finite());

    p.seed = 8;
    const auto c = gen_speech(p);
    CHECK(a.channel(0) != c.channel(0));
    CHECK(c.peak() == 1.0);
}

TEST_CASE("voiced spectrum peaks at an f0 harmonic") {
    SpeechGenParams p;
    p.f0_min_hz = p.f0_max_hz = 120.0;
    p.p_voiced = 1.0;
    p.p_unvoiced = 0.0;
    p.vibrato_depth = 0.005;
    p.seed = 3;
    const auto buf = gen_speech(p);
    const auto spec = rfft(buf.channel(0), 1 << 17);
    const double bin_hz = 48000.0 / (1 << 17);
    std::size_t peak_bin = 0;
    double peak_mag = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        if (f < 100.0 || f > 4000.0) continue;
        if (std::abs(spec[k]) > peak_mag) {
            peak_mag = std::abs(spec[k]);
            peak_bin = k;
        }
    }
    const double f_peak = static_cast<double>(peak_bin) * bin_hz;
    const double k_near = std::round(f_peak / 120.0);
    CAPTURE(f_peak, k_near);
    CHECK(std::abs(f_peak - k_near * 120.0) <= 10.0);
}

TEST_CASE("gen_speech parameter validation") {
    SpeechGenParams p;
    p.f0_min_hz = 60.0;
    CHECK_THROWS_AS(gen_speech(p), ConfigError);
    p = {};
    p.f0_max_hz = 400.0;
    CHECK_THROWS_AS(gen_speech(p), ConfigError);
    p = {};
    p.length_s = 0.0;
    CHECK_THROWS_AS(gen_speech(p), ConfigError);
    p = {};
    p.formants = {{500.0, 90.0}};
    CHECK_THROWS_AS(gen_speech(p), ConfigError);
    p = {};
    p.p_voiced = 0.9;
    p.p_unvoiced = 0.3;
    CHECK_THROWS_AS(gen_speech(p), ConfigError);
}

TEST_CASE("noise kinds are zero-mean, unit-ish level, deterministic") {
    const std::size_t n = 480000; // 10 s
    for (NoiseKind kind : {NoiseKind::white, NoiseKind::wind, NoiseKind::engine,
                           NoiseKind::driving, NoiseKind::babble}) {
        CAPTURE(to_string(kind));
        const auto buf = gen_noise(kind, n, 11);
        const auto& x = buf.channel(0);
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(n);
        const double r = rms(x);
        CHECK(std::abs(mean) < 1e-9 * r);
        CHECK_THAT(r, WithinAbs(0.1, 1e-12));
        const auto again = gen_noise(kind, n, 11);
        CHECK(x == again.channel(0));
    }
}

TEST_CASE("noise input validation") {
    CHECK_THROWS_AS(gen_noise(NoiseKind::white, 0, 1), SizeError);
    CHECK_THROWS_AS(gen_noise(NoiseKind::white, 10, 1, 0), ConfigError);
    CHECK_THROWS_AS(noise_kind_from_string("fog"), ConfigError);
    CHECK(noise_kind_from_string("driving") == NoiseKind::driving);
    CHECK(std::string(to_string(NoiseKind::babble)) == "babble");
}

TEST_CASE("wind noise concentrates below 500 hz") {
    const auto buf = gen_noise(NoiseKind::wind, 480000, 5);
    CHECK(band_energy_fraction(buf.channel(0), 48000, 500.0) > 0.8);
}

TEST_CASE("different seeds decorrelate within a kind") {
    const std::size_t n = 480000;
    for (NoiseKind kind : {NoiseKind::white, NoiseKind::wind, NoiseKind::engine,
                           NoiseKind::driving, NoiseKind::babble}) {
        CAPTURE(to_string(kind));
        const auto a = gen_noise(kind, n, 21);
        const auto b = gen_noise(kind, n, 22);
        CHECK(std::abs(correlation(a.channel(0), b.channel(0))) < 0.05);
    }
}

TEST_CASE("build_dataset emits a full grid of noisy pairs") {
    TempDir dir("grid");
    CorpusConfig cfg;
    cfg.n_utterances = 10;
    cfg.noises = {NoiseKind::white};
    cfg.snrs_db = {-5.0, 0.0, 5.0};
    cfg.speaker.length_s = 0.25;
    cfg.seed = 99;
    cfg.out_dir = dir.path.string();
    const auto m = build_dataset(cfg);

    std::size_t n_clean = 0, n_a = 0, n_b = 0;
    for (const auto& e : m.entries) {
        if (e.role == Role::clean) ++n_clean;
        if (e.role == Role::noisy_a) ++n_a;
        if (e.role == Role::noisy_b) ++n_b;
        CHECK(fs::exists(dir.path / e.path));
    }
    CHECK(n_clean == 10);
    CHECK(n_a == 30);
    CHECK(n_b == 30);

    // each (id, noise, snr) condition has exactly one a/b pair sharing the
    // clean id and differing only in seed
    std::set<std::string> clean_ids;
    for (const auto& e : m.entries)
        if (e.role == Role::clean) clean_ids.insert(e.id);
    for (const auto& ea : m.entries) {
        if (ea.role != Role::noisy_a) continue;
        CHECK(clean_ids.count(ea.id) == 1);
        std::size_t partners = 0;
        for (const auto& eb : m.entries) {
            if (eb.role != Role::noisy_b || eb.id != ea.id || eb.noise != ea.noise ||
                eb.snr_db != ea.snr_db)
                continue;
            ++partners;
            CHECK(eb.seed != ea.seed);
            CHECK(eb.split == ea.split);
        }
        CHECK(partners == 1);
    }
}

TEST_CASE("written noisy files hit the manifest snr") {
    TempDir dir("snr");
    CorpusConfig cfg;
    cfg.n_utterances = 3;
    cfg.noises = {NoiseKind::white};
    cfg.snrs_db = {-5.0, 0.0, 5.0};
    cfg.speaker.length_s = 0.5;
    cfg.seed = 4;
    cfg.out_dir = dir.path.string();
    const auto m = build_dataset(cfg);

    for (const auto& e : m.entries) {
        if (e.role != Role::noisy_a) continue;
        std::string clean_path;
        for (const auto& c : m.entries)
            if (c.role == Role::clean && c.id == e.id) clean_path = c.path;
        REQUIRE(!clean_path.empty());
        const auto clean = read_wav(dir.path / clean_path);
        const auto noisy = read_wav(dir.path / e.path);
        double pc = 0.0, pn = 0.0;
        for (std::size_t i = 0; i < clean.n_samples(); ++i) {
            const double d = noisy.channel(0)[i] - clean.channel(0)[i];
            pc += clean.channel(0)[i] * clean.channel(0)[i];
            pn += d * d;
        }
        const double measured = 10.0 * std::log10(pc / pn);
        CHECK_THAT(measured, WithinAbs(*e.snr_db, 1e-6));
    }
}

TEST_CASE("midside pairs decompose back to mid and side") {
    Rng rng(31);
    std::vector<double> clean(4800), na(4800), nb(4800);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        clean[i] = std::sin(0.01 * static_cast<double>(i));
        na[i] = rng.normal();
        nb[i] = rng.normal();
    }
    const auto pair = make_midside_pair(clean, na, nb, 5.0);
    const auto [mid, side] = mid_side_decompose(pair.left, pair.right);
    for (std::size_t i = 0; i < mid.size(); ++i) {
        REQUIRE_THAT(mid[i], WithinAbs(pair.mid[i], 1e-12));
        REQUIRE_THAT(side[i], WithinAbs(pair.side[i], 1e-12));
    }
    // side carries the same power as the in-mix noise
    double pm = 0.0, ps = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double nm = pair.mid[i] - clean[i];
        pm += nm * nm;
        ps += pair.side[i] * pair.side[i];
    }
    CHECK_THAT(ps / pm, WithinAbs(1.0, 1e-9));
}

TEST_CASE("midside dataset files reproduce from manifest seeds") {
    TempDir dir("midside");
    CorpusConfig cfg;
    cfg.n_utterances = 2;
    cfg.noises = {NoiseKind::wind};
    cfg.snrs_db = {0.0};
    cfg.mode = PairMode::midside;
    cfg.speaker.length_s = 0.25;
    cfg.seed = 12;
    cfg.out_dir = dir.path.string();
    const auto m = build_dataset(cfg);

    for (const auto& el : m.entries) {
        if (el.role != Role::stereo_l) continue;
        const ManifestEntry *er = nullptr, *ec = nullptr;
        for (const auto& e : m.entries) {
            if (e.id != el.id) continue;
            if (e.role == Role::stereo_r && e.noise == el.noise && e.snr_db == el.snr_db) er = &e;
            if (e.role == Role::clean) ec = &e;
        }
        REQUIRE(er != nullptr);
        REQUIRE(ec != nullptr);

        const auto left = read_wav(dir.path / el.path);
        const auto right = read_wav(dir.path / er->path);
        const auto [mid, side] = mid_side_decompose(left.channel(0), right.channel(0));

        SpeechGenParams sp = cfg.speaker;
        sp.seed = ec->seed;
        const auto clean = gen_speech(sp);
        const auto na = gen_noise(*el.noise, clean.n_samples(), el.seed);
        const auto nb = gen_noise(*er->noise, clean.n_samples(), er->seed);
        const auto ref = make_midside_pair(clean.channel(0), na.channel(0), nb.channel(0),
                                           *el.snr_db);
        for (std::size_t i = 0; i < mid.size(); ++i) {
            REQUIRE_THAT(mid[i], WithinAbs(ref.mid[i], 1e-6));
            REQUIRE_THAT(side[i], WithinAbs(ref.side[i], 1e-6));
        }
    }
}

TEST_CASE("split is utterance-level and deterministic") {
    TempDir dir("split");
    CorpusConfig cfg;
    cfg.n_utterances = 10;
    cfg.noises = {NoiseKind::white};
    cfg.snrs_db = {0.0};
    cfg.speaker.length_s = 0.1;
    cfg.seed = 77;
    cfg.out_dir = dir.path.string();
    const auto m = build_dataset(cfg);

    const auto s1 = split_dataset(m, 0.2, 5);
    const auto s2 = split_dataset(m, 0.2, 5);
    std::set<std::string> train_ids, test_ids;
    for (std::size_t i = 0; i < s1.entries.size(); ++i) {
        CHECK(s1.entries[i].split == s2.entries[i].split);
        (s1.entries[i].split == Split::test ? test_ids : train_ids).insert(s1.entries[i].id);
    }
    CHECK(test_ids.size() == 2);
    CHECK(train_ids.size() == 8);
    for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);

    const auto s3 = split_dataset(m, 0.2, 6);
    bool any_differs = false;
    for (std::size_t i = 0; i < s1.entries.size(); ++i)
        any_differs |= s1.entries[i].split != s3.entries[i].split;
    CHECK(any_differs);

    CHECK_THROWS_AS(split_dataset(m, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(m, 1.0, 1), ConfigError);
}

TEST_CASE("manifest roundtrips through jsonl") {
    TempDir dir("manifest");
    DatasetManifest m;
    m.root = dir.path.string();
    m.entries.push_back({"utt000", Role::clean, "utt000_clean.wav", {}, {}, Split::train, 42});
    m.entries.push_back(
        {"utt000", Role::noisy_a, "utt000_white_snr0_a.wav", NoiseKind::white, 0.0, Split::test, 43});
    m.entries.push_back(
        {"utt000", Role::stereo_l, "utt000_wind_snrm5_l.wav", NoiseKind::wind, -5.0, Split::train, 44});
    write_manifest(m, dir.path / "manifest.jsonl");

    const auto r = read_manifest(dir.path / "manifest.jsonl");
    CHECK(r.root == dir.path.string());
    REQUIRE(r.entries.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.entries[i].id == m.entries[i].id);
        CHECK(r.entries[i].role == m.entries[i].role);
        CHECK(r.entries[i].path == m.entries[i].path);
        CHECK(r.entries[i].noise == m.entries[i].noise);
        CHECK(r.entries[i].snr_db == m.entries[i].snr_db);
        CHECK(r.entries[i].split == m.entries[i].split);
        CHECK(r.entries[i].seed == m.entries[i].seed);
    }

    std::ofstream bad(dir.path / "bad.jsonl");
    bad << "{\"id\":\"x\",\"role\":\"clean\"}\n";
    bad.close();
    CHECK_THROWS_AS(read_manifest(dir.path / "bad.jsonl"), FormatError);
    CHECK_THROWS_AS(read_manifest(dir.path / "missing.jsonl"), IoError);
}

TEST_CASE("rebuilding a dataset is byte-identical") {
    TempDir d1("det1"), d2("det2");
    CorpusConfig cfg;
    cfg.n_utterances = 2;
    cfg.noises = {NoiseKind::engine};
    cfg.snrs_db = {0.0};
    cfg.speaker.length_s = 0.25;
    cfg.seed = 123;
    cfg.out_dir = d1.path.string();
    const auto m1 = build_dataset(cfg);
    cfg.out_dir = d2.path.string();
    const auto m2 = build_dataset(cfg);

    REQUIRE(m1.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m1.entries.size(); ++i) {
        CHECK(m1.entries[i].path == m2.entries[i].path);
        CHECK(m1.entries[i].seed == m2.entries[i].seed);
        CHECK(file_bytes(d1.path / m1.entries[i].path) == file_bytes(d2.path / m2.entries[i].path));
    }
}

TEST_CASE("build_dataset validates its config") {
    CorpusConfig cfg;
    cfg.out_dir = "";
    CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
    cfg.out_dir = "/tmp/n2n_corpus_unused";
    cfg.n_utterances = 0;
    CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
    cfg.n_utterances = 1;
    cfg.noises = {};
    CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
}
