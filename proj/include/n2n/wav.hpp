#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "n2n/audio.hpp"
#include "n2n/error.hpp"

namespace n2n {

enum class WavEncoding { pcm16, float32 };

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16le(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

} // namespace detail

// Reads a RIFF/WAVE file. PCM 16-bit and IEEE float32 are supported, mono or
// stereo. Integer samples are scaled by 1/32768, so -32768 maps to -1.0 exactly.
inline AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError(path.string() + ": not a RIFF/WAVE file");

    std::uint16_t format_tag = 0, n_channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        std::uint32_t chunk_len = detail::read_u32le(hdr + 4);
        std::size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16 || body + 16 > bytes.size())
                throw FormatError(path.string() + ": malformed fmt chunk");
            const unsigned char* p = bytes.data() + body;
            format_tag = detail::read_u16le(p);
            n_channels = detail::read_u16le(p + 2);
            sample_rate = detail::read_u32le(p + 4);
            bits = detail::read_u16le(p + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (body + chunk_len > bytes.size())
                throw FormatError(path.string() + ": truncated data chunk");
            data_off = body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }
    if (!have_fmt || data_off == 0)
        throw FormatError(path.string() + ": missing fmt or data chunk");
    if (n_channels < 1 || n_channels > 2)
        throw FormatError(path.string() + ": unsupported channel count");
    if (sample_rate == 0) throw FormatError(path.string() + ": zero sample rate");

    const unsigned char* d = bytes.data() + data_off;
    AudioBuffer buf;
    buf.sample_rate = static_cast<int>(sample_rate);
    buf.channels.resize(n_channels);

    if (format_tag == 1 && bits == 16) {
        std::size_t n_frames = data_len / (2 * n_channels);
        if (n_frames * 2 * n_channels != data_len)
            throw FormatError(path.string() + ": data chunk not frame-aligned");
        for (auto& ch : buf.channels) ch.resize(n_frames);
        for (std::size_t i = 0; i < n_frames; ++i)
            for (std::uint16_t c = 0; c < n_channels; ++c) {
                const unsigned char* p = d + 2 * (i * n_channels + c);
                std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
                buf.channels[c][i] = static_cast<double>(v) / 32768.0;
            }
    } else if (format_tag == 3 && bits == 32) {
        std::size_t n_frames = data_len / (4 * n_channels);
        if (n_frames * 4 * n_channels != data_len)
            throw FormatError(path.string() + ": data chunk not frame-aligned");
        for (auto& ch : buf.channels) ch.resize(n_frames);
        for (std::size_t i = 0; i < n_frames; ++i)
            for (std::uint16_t c = 0; c < n_channels; ++c) {
                std::uint32_t u = detail::read_u32le(d + 4 * (i * n_channels + c));
                float v;
                std::memcpy(&v, &u, 4);
                buf.channels[c][i] = static_cast<double>(v);
            }
    } else {
        throw FormatError(path.string() + ": unsupported encoding (want PCM16 or float32)");
    }
    return buf;
}

// Writes PCM16 or float32. A float32 round trip is bit-exact for values
// representable in single precision; PCM16 quantizes to the nearest code,
// which keeps samples within 1/65536 except for the +1.0 full-scale clip.
inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      WavEncoding enc = WavEncoding::float32) {
    if (buf.n_channels() == 0 || buf.n_samples() == 0)
        throw SizeError("write_wav: empty buffer");
    if (buf.n_channels() > 2) throw FormatError("write_wav: unsupported channel count");
    for (const auto& ch : buf.channels)
        if (ch.size() != buf.n_samples()) throw SizeError("write_wav: ragged channels");

    const std::uint16_t n_ch = static_cast<std::uint16_t>(buf.n_channels());
    const std::uint16_t bytes_per = enc == WavEncoding::pcm16 ? 2 : 4;
    const std::uint32_t n_frames = static_cast<std::uint32_t>(buf.n_samples());
    const std::uint32_t data_len = n_frames * n_ch * bytes_per;

    std::string out;
    out.reserve(64 + data_len);
    out += "RIFF";
    const bool fact = enc == WavEncoding::float32; // fact chunk for non-PCM
    std::uint32_t riff_len = 4 + (8 + 16) + (fact ? 8 + 4 : 0) + 8 + data_len;
    detail::put_u32le(out, riff_len);
    out += "WAVEfmt ";
    detail::put_u32le(out, 16);
    detail::put_u16le(out, enc == WavEncoding::pcm16 ? 1 : 3);
    detail::put_u16le(out, n_ch);
    detail::put_u32le(out, static_cast<std::uint32_t>(buf.sample_rate));
    detail::put_u32le(out, static_cast<std::uint32_t>(buf.sample_rate) * n_ch * bytes_per);
    detail::put_u16le(out, static_cast<std::uint16_t>(n_ch * bytes_per));
    detail::put_u16le(out, static_cast<std::uint16_t>(bytes_per * 8));
    if (fact) {
        out += "fact";
        detail::put_u32le(out, 4);
        detail::put_u32le(out, n_frames);
    }
    out += "data";
    detail::put_u32le(out, data_len);

    if (enc == WavEncoding::pcm16) {
        for (std::uint32_t i = 0; i < n_frames; ++i)
            for (std::uint16_t c = 0; c < n_ch; ++c) {
                double v = std::lround(buf.channels[c][i] * 32768.0);
                v = std::min(32767.0, std::max(-32768.0, v));
                detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
            }
    } else {
        for (std::uint32_t i = 0; i < n_frames; ++i)
            for (std::uint16_t c = 0; c < n_ch; ++c) {
                float v = static_cast<float>(buf.channels[c][i]);
                std::uint32_t u;
                std::memcpy(&u, &v, 4);
                detail::put_u32le(out, u);
            }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

} // namespace n2n
