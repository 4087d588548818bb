#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "n2n/dsp.hpp"
#include "n2n/fft.hpp"
#include "n2n/rng.hpp"

using namespace n2n;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    std::vector<double> x(n);
    Rng rng(seed);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

// direct O(n^2) DFT, the oracle for the fast transform
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x, std::size_t n_fft) {
    std::vector<std::complex<double>> out(n_fft / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                             static_cast<double>(n_fft);
            acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

TEST_CASE("hann window closed forms") {
    const auto w4 = hann_window(4);
    REQUIRE(w4.size() == 4);
    CHECK(w4[0] == 0.0);
    CHECK_THAT(w4[1], WithinAbs(0.5, 1e-15));
    CHECK(w4[2] == 1.0);
    CHECK_THAT(w4[3], WithinAbs(0.5, 1e-15));

    const auto w2 = hann_window(2);
    CHECK(w2[0] == 0.0);
    CHECK(w2[1] == 1.0);

    CHECK_THROWS_AS(hann_window(1), SizeError);
}

TEST_CASE("hann COLA identity is exact") {
    for (std::size_t n : {4u, 8u, 64u, 960u}) {
        const auto w = hann_window(n);
        for (std::size_t k = 0; k < n / 2; ++k)
            CHECK(w[k] + w[k + n / 2] == 1.0);
    }
}

TEST_CASE("symmetric hann endpoints") {
    const auto w = hann_window(9, false);
    CHECK(w[0] == 0.0);
    CHECK_THAT(w[4], WithinAbs(1.0, 1e-15));
    CHECK_THAT(w[8], WithinAbs(0.0, 1e-15));
}

TEST_CASE("frame_signal windowed constant") {
    const std::vector<double> x(10, 1.0);
    const auto fs = frame_signal(x, 4, true);
    CHECK(fs.n_frames == 4);
    CHECK(fs.hop() == 2);
    for (std::size_t i = 0; i < fs.n_frames; ++i) {
        const auto f = fs.frame(i);
        CHECK(f[0] == 0.0);
        CHECK_THAT(f[1], WithinAbs(0.5, 1e-15));
        CHECK(f[2] == 1.0);
        CHECK_THAT(f[3], WithinAbs(0.5, 1e-15));
    }
}

TEST_CASE("frame_signal unwindowed slices") {
    const auto x = random_signal(100, 31);
    const auto fs = frame_signal(x, 8, false);
    REQUIRE(fs.n_frames == (100 - 8) / 4 + 1);
    for (std::size_t i = 0; i < fs.n_frames; ++i) {
        const auto f = fs.frame(i);
        for (std::size_t k = 0; k < 8; ++k) CHECK(f[k] == x[i * 4 + k]);
    }
}

TEST_CASE("frame count formula") {
    CHECK(frame_count(10, 4) == 4);
    CHECK(frame_count(48000, 960) == 99);
    CHECK(frame_count(959, 960) == 0);
    CHECK(frame_count(960, 960) == 1);
    CHECK_THROWS_AS(frame_signal(std::vector<double>(3, 0.0), 4, true), SizeError);
    CHECK_THROWS_AS(frame_signal(std::vector<double>(10, 0.0), 5, true), SizeError);
}

TEST_CASE("overlap_add reconstructs the signal") {
    const auto x = random_signal(4800, 97);
    const auto fs = frame_signal(x, 960, true);
    const auto y = overlap_add(fs);
    REQUIRE(y.size() == (fs.n_frames - 1) * 480 + 960);
    // sample 0 falls where the periodic Hann is exactly zero
    CHECK(y[0] == 0.0);
    for (std::size_t i = 1; i < y.size(); ++i) CHECK_THAT(y[i], WithinAbs(x[i], 1e-10));
}

TEST_CASE("overlap_add of constant input") {
    const std::vector<double> x(2400, 1.0);
    const auto y = overlap_add(frame_signal(x, 480, true));
    for (std::size_t i = 240; i + 240 < y.size(); ++i) CHECK_THAT(y[i], WithinAbs(1.0, 1e-12));
}

TEST_CASE("overlap_add input validation") {
    FrameSequence empty;
    empty.frame_len = 4;
    CHECK_THROWS_AS(overlap_add(empty), SizeError);
    const auto fs = frame_signal(std::vector<double>(16, 1.0), 4, false);
    CHECK_THROWS_AS(overlap_add(fs), SizeError);
}

TEST_CASE("mid_side compose and decompose") {
    const std::vector<double> m = {0.5}, s = {0.25};
    const auto [l, r] = mid_side_compose(m, s);
    CHECK(l[0] == 0.75);
    CHECK(r[0] == 0.25);
    const auto [m2, s2] = mid_side_decompose(l, r);
    CHECK(m2[0] == 0.5);
    CHECK(s2[0] == 0.25);

    const auto [l0, r0] = mid_side_compose(m, std::vector<double>{0.0});
    CHECK(l0[0] == r0[0]);

    CHECK_THROWS_AS(mid_side_compose(m, std::vector<double>{1.0, 2.0}), SizeError);
    CHECK_THROWS_AS(mid_side_decompose(m, std::vector<double>{1.0, 2.0}), SizeError);
}

TEST_CASE("mid_side roundtrip on random stereo") {
    const auto l = random_signal(1000, 41);
    const auto r = random_signal(1000, 42);
    const auto [m, s] = mid_side_decompose(l, r);
    const auto [l2, r2] = mid_side_compose(m, s);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK_THAT(l2[i], WithinAbs(l[i], 1e-15));
        CHECK_THAT(r2[i], WithinAbs(r[i], 1e-15));
    }
}

TEST_CASE("mix_at_snr scale factors") {
    // both signals have rms 0.1
    std::vector<double> clean(100), noise(100);
    for (std::size_t i = 0; i < 100; ++i) {
        clean[i] = 0.1;
        noise[i] = (i % 2 == 0) ? 0.1 : -0.1;
    }
    auto [noisy0, sn0] = mix_at_snr(clean, noise, 0.0);
    for (std::size_t i = 0; i < 100; ++i) CHECK_THAT(sn0[i], WithinAbs(noise[i], 1e-12));

    auto [noisy20, sn20] = mix_at_snr(clean, noise, 20.0);
    for (std::size_t i = 0; i < 100; ++i) CHECK_THAT(sn20[i], WithinAbs(0.1 * noise[i], 1e-12));
}

TEST_CASE("mix_at_snr hits the requested ratio") {
    const auto clean = random_signal(48000, 51);
    const auto noise = random_signal(48000, 52);
    for (double snr : {-5.0, 0.0, 5.0, 17.3}) {
        auto [noisy, sn] = mix_at_snr(clean, noise, snr);
        double pc = 0.0, pn = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            pc += clean[i] * clean[i];
            pn += sn[i] * sn[i];
            CHECK(noisy[i] == clean[i] + sn[i]);
        }
        const double measured = 10.0 * std::log10(pc / pn);
        CHECK_THAT(measured, WithinAbs(snr, 1e-9));
    }
}

TEST_CASE("mix_at_snr scale equivariance and errors") {
    const auto clean = random_signal(1000, 61);
    const auto noise = random_signal(1000, 62);
    auto [noisy1, sn1] = mix_at_snr(clean, noise, 3.0);
    auto clean2 = clean;
    for (auto& v : clean2) v *= 2.0;
    auto [noisy2, sn2] = mix_at_snr(clean2, noise, 3.0);
    for (std::size_t i = 0; i < 1000; ++i) CHECK_THAT(sn2[i], WithinAbs(2.0 * sn1[i], 1e-12));

    CHECK_THROWS_AS(mix_at_snr(std::vector<double>(10, 0.0), noise, 0.0), DegenerateSignalError);
    CHECK_THROWS_AS(mix_at_snr(clean, std::vector<double>(1000, 0.0), 0.0),
                    DegenerateSignalError);
    CHECK_THROWS_AS(mix_at_snr(clean, std::vector<double>(10, 1.0), 0.0), SizeError);
}

TEST_CASE("rfft known transforms") {
    const std::vector<double> impulse = {1.0, 0.0, 0.0, 0.0};
    const auto si = rfft(impulse, 4);
    REQUIRE(si.size() == 3);
    for (const auto& b : si) {
        CHECK_THAT(b.real(), WithinAbs(1.0, 1e-14));
        CHECK_THAT(b.imag(), WithinAbs(0.0, 1e-14));
    }
    const std::vector<double> ones = {1.0, 1.0, 1.0, 1.0};
    const auto sc = rfft(ones, 4);
    CHECK_THAT(sc[0].real(), WithinAbs(4.0, 1e-14));
    CHECK_THAT(std::abs(sc[1]), WithinAbs(0.0, 1e-14));
    CHECK_THAT(std::abs(sc[2]), WithinAbs(0.0, 1e-14));

    CHECK_THROWS_AS(rfft(ones, 6), SizeError);
}

TEST_CASE("rfft matches the naive dft") {
    const auto x = random_signal(64, 71);
    const auto fast = rfft(x, 64);
    const auto slow = naive_dft(x, 64);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k)
        CHECK_THAT(std::abs(fast[k] - slow[k]), WithinAbs(0.0, 1e-10));

    // zero-padded case
    const auto x2 = random_signal(60, 72);
    const auto fast2 = rfft(x2, 64);
    const auto slow2 = naive_dft(x2, 64);
    for (std::size_t k = 0; k < fast2.size(); ++k)
        CHECK_THAT(std::abs(fast2[k] - slow2[k]), WithinAbs(0.0, 1e-10));
}

TEST_CASE("irfft inverts rfft") {
    const auto x = random_signal(128, 81);
    const auto y = irfft(rfft(x, 128), 128);
    REQUIRE(y.size() == 128);
    for (std::size_t i = 0; i < 128; ++i) CHECK_THAT(y[i], WithinAbs(x[i], 1e-10));
}

TEST_CASE("correlation basics") {
    const auto x = random_signal(500, 91);
    CHECK_THAT(correlation(x, x), WithinAbs(1.0, 1e-12));
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    CHECK_THAT(correlation(x, neg), WithinAbs(-1.0, 1e-12));
}
