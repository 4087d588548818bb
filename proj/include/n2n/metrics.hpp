#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "n2n/dsp.hpp"
#include "n2n/error.hpp"
#include "n2n/fft.hpp"
#include "n2n/resample.hpp"

namespace n2n {

// Segmental SNR: per 20 ms frame (50% overlap, no window),
// 10*log10(sum x^2 / sum (x - xhat)^2) clamped to [-10, 35] dB, then the
// mean over frames. A zero-error frame clamps high, a silent clean frame
// clamps low.
inline double ssnr(std::span<const double> clean, std::span<const double> processed,
                   std::size_t frame_len = 960) {
    if (clean.size() != processed.size()) throw AlignmentError("ssnr: length mismatch");
    if (clean.size() < frame_len) throw SizeError("ssnr: input shorter than one frame");
    double total = 0.0;
    for (double v : clean) total += v * v;
    if (total == 0.0) throw DegenerateSignalError("ssnr: silent clean reference");

    const std::size_t hop = frame_len / 2;
    const std::size_t n_frames = (clean.size() - frame_len) / hop + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_frames; ++i) {
        double sx = 0.0, se = 0.0;
        for (std::size_t k = 0; k < frame_len; ++k) {
            const double x = clean[i * hop + k];
            const double e = x - processed[i * hop + k];
            sx += x * x;
            se += e * e;
        }
        double db;
        if (se == 0.0)
            db = 35.0;
        else if (sx == 0.0)
            db = -10.0;
        else
            db = std::clamp(10.0 * std::log10(sx / se), -10.0, 35.0);
        acc += db;
    }
    return acc / static_cast<double>(n_frames);
}

// Log-spectral distance: per Hann-windowed frame (FFT 1024),
// sqrt(mean over bins of (20*log10(|X|/|Xhat|))^2) with magnitudes floored
// at 1e-8, then the mean over frames.
inline double lsd(std::span<const double> clean, std::span<const double> processed,
                  std::size_t frame_len = 960) {
    if (clean.size() != processed.size()) throw AlignmentError("lsd: length mismatch");
    if (clean.size() < frame_len) throw SizeError("lsd: input shorter than one frame");
    const std::size_t n_fft = next_pow2(frame_len);
    const auto fa = frame_signal(clean, frame_len, true);
    const auto fb = frame_signal(processed, frame_len, true);
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.n_frames; ++i) {
        const auto sa = rfft(fa.frame(i), n_fft);
        const auto sb = rfft(fb.frame(i), n_fft);
        double sum = 0.0;
        for (std::size_t k = 0; k < sa.size(); ++k) {
            const double ma = std::max(std::abs(sa[k]), 1e-8);
            const double mb = std::max(std::abs(sb[k]), 1e-8);
            const double d = 20.0 * std::log10(ma / mb);
            sum += d * d;
        }
        acc += std::sqrt(sum / static_cast<double>(sa.size()));
    }
    return acc / static_cast<double>(fa.n_frames);
}

namespace detail {

// matlab hanning(n): symmetric Hann without the zero endpoints
inline std::vector<double> matlab_hanning(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k + 1) /
                                     static_cast<double>(n + 1)));
    return w;
}

struct Stft {
    std::vector<double> mag2; // n_frames * bins, |X|^2
    std::size_t n_frames = 0;
    std::size_t bins = 0;
};

inline Stft stoi_stft(const std::vector<double>& x, std::size_t frame_len, std::size_t hop,
                      std::size_t n_fft, const std::vector<double>& w) {
    Stft out;
    out.bins = n_fft / 2 + 1;
    if (x.size() < frame_len) return out;
    out.n_frames = (x.size() - frame_len) / hop + 1;
    out.mag2.resize(out.n_frames * out.bins);
    std::vector<double> buf(frame_len);
    for (std::size_t i = 0; i < out.n_frames; ++i) {
        for (std::size_t k = 0; k < frame_len; ++k) buf[k] = x[i * hop + k] * w[k];
        const auto spec = rfft(buf, n_fft);
        for (std::size_t k = 0; k < out.bins; ++k) out.mag2[i * out.bins + k] = std::norm(spec[k]);
    }
    return out;
}

// One-third-octave band edges snapped to the nearest FFT bin (first bin on
// ties), 15 bands from 150 Hz; returns per-band [low, high) bin ranges.
inline std::vector<std::pair<std::size_t, std::size_t>> third_octave_bands(double fs,
                                                                           std::size_t n_fft,
                                                                           std::size_t num_bands,
                                                                           double min_freq) {
    const std::size_t bins = n_fft / 2 + 1;
    auto nearest_bin = [&](double target) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * fs / static_cast<double>(n_fft);
            const double d = (f - target) * (f - target);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    };
    std::vector<std::pair<std::size_t, std::size_t>> bands(num_bands);
    for (std::size_t i = 0; i < num_bands; ++i) {
        const double lo = min_freq * std::pow(2.0, (2.0 * static_cast<double>(i) - 1.0) / 6.0);
        const double hi = min_freq * std::pow(2.0, (2.0 * static_cast<double>(i) + 1.0) / 6.0);
        bands[i] = {nearest_bin(lo), nearest_bin(hi)};
    }
    return bands;
}

} // namespace detail

// Short-time objective intelligibility, following the reference algorithm:
// resample to 10 kHz, drop frames more than 40 dB below the loudest clean
// frame, 15 one-third-octave band envelopes, clipped normalized correlation
// over 30-frame segments, averaged. Returned score is clamped into [0, 1].
inline double stoi(std::span<const double> clean, std::span<const double> processed, int rate) {
    if (clean.size() != processed.size()) throw AlignmentError("stoi: length mismatch");
    constexpr int kFs = 10000;
    constexpr std::size_t kFrame = 256, kHop = 128, kFft = 512, kBands = 15, kSeg = 30;
    constexpr double kMinFreq = 150.0, kDynRange = 40.0, kBeta = -15.0;
    const double eps = std::numeric_limits<double>::epsilon();

    std::vector<double> x = resample(clean, rate, kFs);
    std::vector<double> y = resample(processed, rate, kFs);
    const auto w = detail::matlab_hanning(kFrame);

    // silence removal keyed on the clean energy profile
    if (x.size() < kFrame) throw SizeError("stoi: signal too short");
    const std::size_t n_frames = (x.size() - kFrame) / kHop + 1;
    std::vector<double> energy_db(n_frames);
    double max_db = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_frames; ++i) {
        double e = 0.0;
        for (std::size_t k = 0; k < kFrame; ++k) {
            const double v = x[i * kHop + k] * w[k];
            e += v * v;
        }
        energy_db[i] = 20.0 * std::log10(std::sqrt(e) + eps);
        max_db = std::max(max_db, energy_db[i]);
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n_frames; ++i)
        if (energy_db[i] > max_db - kDynRange) keep.push_back(i);
    if (keep.empty()) throw SizeError("stoi: no frames above the silence threshold");

    // overlap-add the kept windowed frames back into continuous signals
    const std::size_t kept_len = (keep.size() - 1) * kHop + kFrame;
    std::vector<double> xs(kept_len, 0.0), ys(kept_len, 0.0);
    for (std::size_t j = 0; j < keep.size(); ++j)
        for (std::size_t k = 0; k < kFrame; ++k) {
            xs[j * kHop + k] += x[keep[j] * kHop + k] * w[k];
            ys[j * kHop + k] += y[keep[j] * kHop + k] * w[k];
        }

    const auto sx = detail::stoi_stft(xs, kFrame, kHop, kFft, w);
    const auto sy = detail::stoi_stft(ys, kFrame, kHop, kFft, w);
    if (sx.n_frames < kSeg)
        throw SizeError("stoi: fewer than 30 frames after silence removal (need >= 384 ms)");

    static const auto bands = detail::third_octave_bands(kFs, kFft, kBands, kMinFreq);
    // band envelopes: sqrt of summed power per band, [frame][band]
    const std::size_t m_frames = sx.n_frames;
    std::vector<double> xb(m_frames * kBands), yb(m_frames * kBands);
    for (std::size_t i = 0; i < m_frames; ++i)
        for (std::size_t b = 0; b < kBands; ++b) {
            double ax = 0.0, ay = 0.0;
            for (std::size_t k = bands[b].first; k < bands[b].second; ++k) {
                ax += sx.mag2[i * sx.bins + k];
                ay += sy.mag2[i * sy.bins + k];
            }
            xb[i * kBands + b] = std::sqrt(ax);
            yb[i * kBands + b] = std::sqrt(ay);
        }

    const double clip = std::pow(10.0, -kBeta / 20.0);
    double corr_sum = 0.0;
    const std::size_t n_segments = m_frames - kSeg + 1;
    std::vector<double> xv(kSeg), yv(kSeg);
    for (std::size_t s = 0; s < n_segments; ++s) {
        for (std::size_t b = 0; b < kBands; ++b) {
            double nx = 0.0, ny = 0.0;
            for (std::size_t t = 0; t < kSeg; ++t) {
                xv[t] = xb[(s + t) * kBands + b];
                yv[t] = yb[(s + t) * kBands + b];
                nx += xv[t] * xv[t];
                ny += yv[t] * yv[t];
            }
            const double scale = std::sqrt(nx) / (std::sqrt(ny) + eps);
            double mx = 0.0, my = 0.0;
            for (std::size_t t = 0; t < kSeg; ++t) {
                yv[t] = std::min(yv[t] * scale, xv[t] * (1.0 + clip));
                mx += xv[t];
                my += yv[t];
            }
            mx /= kSeg;
            my /= kSeg;
            double dot = 0.0, qx = 0.0, qy = 0.0;
            for (std::size_t t = 0; t < kSeg; ++t) {
                const double a = xv[t] - mx;
                const double c = yv[t] - my;
                dot += a * c;
                qx += a * a;
                qy += c * c;
            }
            corr_sum += dot / ((std::sqrt(qx) + eps) * (std::sqrt(qy) + eps));
        }
    }
    const double d = corr_sum / static_cast<double>(n_segments * kBands);
    return std::clamp(d, 0.0, 1.0);
}

// One evaluated file (or one aggregate row when file is __mean__/__std__).
struct MetricsRecord {
    std::string file;
    std::string noise_type;
    std::string system; // x+n | wiener | ssd | hsd
    double snr_db = 0.0;
    double ssnr = 0.0;
    double lsd = 0.0;
    double stoi = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRecord> per_file;
    std::vector<MetricsRecord> aggregates; // __mean__ and __std__ per condition
};

inline MetricsRecord compute_metrics(const std::string& file, const std::string& noise_type,
                                     const std::string& system, double snr_db,
                                     std::span<const double> clean,
                                     std::span<const double> processed, int rate) {
    MetricsRecord r;
    r.file = file;
    r.noise_type = noise_type;
    r.system = system;
    r.snr_db = snr_db;
    r.ssnr = ssnr(clean, processed);
    r.lsd = lsd(clean, processed);
    r.stoi = stoi(clean, processed, rate);
    return r;
}

// Groups per-file records by (noise_type, system, snr_db) in first-appearance
// order and appends mean and population-std rows per group.
inline MetricsReport evaluate(std::vector<MetricsRecord> per_file) {
    MetricsReport report;
    report.per_file = std::move(per_file);

    struct Group {
        MetricsRecord proto;
        std::vector<const MetricsRecord*> members;
    };
    std::vector<Group> groups;
    for (const auto& r : report.per_file) {
        Group* g = nullptr;
        for (auto& cand : groups)
            if (cand.proto.noise_type == r.noise_type && cand.proto.system == r.system &&
                cand.proto.snr_db == r.snr_db) {
                g = &cand;
                break;
            }
        if (!g) {
            groups.push_back({r, {}});
            g = &groups.back();
        }
        g->members.push_back(&r);
    }

    for (const auto& g : groups) {
        const double n = static_cast<double>(g.members.size());
        MetricsRecord mean = g.proto, sd = g.proto;
        mean.file = "__mean__";
        sd.file = "__std__";
        mean.ssnr = mean.lsd = mean.stoi = 0.0;
        for (const auto* m : g.members) {
            mean.ssnr += m->ssnr;
            mean.lsd += m->lsd;
            mean.stoi += m->stoi;
        }
        mean.ssnr /= n;
        mean.lsd /= n;
        mean.stoi /= n;
        double vs = 0.0, vl = 0.0, vt = 0.0;
        for (const auto* m : g.members) {
            vs += (m->ssnr - mean.ssnr) * (m->ssnr - mean.ssnr);
            vl += (m->lsd - mean.lsd) * (m->lsd - mean.lsd);
            vt += (m->stoi - mean.stoi) * (m->stoi - mean.stoi);
        }
        sd.ssnr = std::sqrt(vs / n);
        sd.lsd = std::sqrt(vl / n);
        sd.stoi = std::sqrt(vt / n);
        report.aggregates.push_back(mean);
        report.aggregates.push_back(sd);
    }
    return report;
}

inline void write_metrics_csv(const MetricsReport& report, std::ostream& os) {
    os << "file,noise_type,system,snr_db,ssnr,lsd,stoi\n";
    char line[512];
    auto emit = [&](const MetricsRecord& r) {
        std::snprintf(line, sizeof line, "%s,%s,%s,%g,%.6f,%.6f,%.6f\n", r.file.c_str(),
                      r.noise_type.c_str(), r.system.c_str(), r.snr_db, r.ssnr, r.lsd, r.stoi);
        os << line;
    };
    for (const auto& r : report.per_file) emit(r);
    for (const auto& r : report.aggregates) emit(r);
}

inline void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_metrics_csv(report, os);
    if (!os) throw IoError("write failed: " + path);
}

} // namespace n2n
