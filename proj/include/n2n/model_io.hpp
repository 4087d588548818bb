#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "n2n/adam.hpp"
#include "n2n/error.hpp"
#include "n2n/model.hpp"

namespace n2n {

// Model file layout, all little-endian:
//   "N2NF" | u32 version=1 | u32 layer_count
//   per layer: u32 type, u32 k, u32 in_ch, u32 out_ch
//   float32 blobs in layer order: conv kernel+bias, bn gamma+beta+running stats
//   optional: "ADAM" | u64 t | float32 m blob | float32 v blob

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    write_u32(os, static_cast<std::uint32_t>(v));
    write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("model file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is) {
    const std::uint64_t lo = read_u32(is);
    const std::uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

template <typename Real>
void write_blob(std::ostream& os, const Real* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, static_cast<float>(p[i]));
}

template <typename Real>
void read_blob(std::istream& is, Real* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<Real>(read_f32(is));
}

} // namespace detail

template <typename Real>
void save_model(const FcnnModel<Real>& model, const std::string& path,
                const AdamState<Real>* state = nullptr) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("N2NF", 4);
    detail::write_u32(os, 1);
    detail::write_u32(os, static_cast<std::uint32_t>(model.specs.size()));
    for (const auto& s : model.specs) {
        detail::write_u32(os, static_cast<std::uint32_t>(s.kind));
        detail::write_u32(os, s.k);
        detail::write_u32(os, s.in_ch);
        detail::write_u32(os, s.out_ch);
    }
    for (std::size_t i = 0; i < model.specs.size(); ++i) {
        const auto& s = model.specs[i];
        if (s.kind == LayerKind::conv) {
            const std::size_t kn = static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
            detail::write_blob(os, model.conv_kernel(i), kn);
            detail::write_blob(os, model.conv_bias(i), s.out_ch);
        } else if (s.kind == LayerKind::batch_norm) {
            detail::write_blob(os, model.bn_gamma(i), s.out_ch);
            detail::write_blob(os, model.bn_beta(i), s.out_ch);
            detail::write_blob(os, model.bn_running_mean(i), s.out_ch);
            detail::write_blob(os, model.bn_running_var(i), s.out_ch);
        }
    }
    if (state) {
        if (state->m.size() != model.params.size())
            throw ShapeError("save_model: optimizer state does not match model");
        os.write("ADAM", 4);
        detail::write_u64(os, state->t);
        detail::write_blob(os, state->m.data(), state->m.size());
        detail::write_blob(os, state->v.data(), state->v.size());
    }
    if (!os) throw IoError("write failed: " + path);
}

template <typename Real>
struct LoadedModel {
    FcnnModel<Real> model;
    std::optional<AdamState<Real>> adam;
};

template <typename Real = float>
LoadedModel<Real> load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "N2NF")
        throw FormatError("bad model magic");
    const std::uint32_t version = detail::read_u32(is);
    if (version != 1) throw FormatError("unsupported model version");
    const std::uint32_t n_layers = detail::read_u32(is);
    if (n_layers == 0 || n_layers > 4096) throw FormatError("implausible layer count");

    std::vector<LayerSpec> specs(n_layers);
    for (auto& s : specs) {
        const std::uint32_t kind = detail::read_u32(is);
        if (kind > static_cast<std::uint32_t>(LayerKind::tanh_out))
            throw FormatError("unknown layer type tag");
        s.kind = static_cast<LayerKind>(kind);
        s.k = detail::read_u32(is);
        s.in_ch = detail::read_u32(is);
        s.out_ch = detail::read_u32(is);
    }

    // Recover the architecture knobs and insist the descriptor list is
    // exactly what this family produces; anything else is a foreign file.
    ArchConfig arch;
    arch.kernel = specs[0].k;
    arch.channels = specs[0].out_ch;
    arch.conv_layers = 0;
    for (const auto& s : specs)
        if (s.kind == LayerKind::conv) ++arch.conv_layers;
    std::vector<LayerSpec> expect;
    try {
        expect = detail::build_layer_specs(arch);
    } catch (const ConfigError&) {
        throw FormatError("model descriptors do not form a valid architecture");
    }
    if (expect.size() != specs.size()) throw FormatError("unexpected layer sequence");
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].kind != expect[i].kind || specs[i].k != expect[i].k ||
            specs[i].in_ch != expect[i].in_ch || specs[i].out_ch != expect[i].out_ch)
            throw FormatError("unexpected layer sequence");

    LoadedModel<Real> out;
    out.model = init_model<Real>(0, arch);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (s.kind == LayerKind::conv) {
            const std::size_t kn = static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
            detail::read_blob(is, out.model.conv_kernel(i), kn);
            detail::read_blob(is, out.model.conv_bias(i), s.out_ch);
        } else if (s.kind == LayerKind::batch_norm) {
            detail::read_blob(is, out.model.bn_gamma(i), s.out_ch);
            detail::read_blob(is, out.model.bn_beta(i), s.out_ch);
            detail::read_blob(is, out.model.bn_running_mean(i), s.out_ch);
            detail::read_blob(is, out.model.bn_running_var(i), s.out_ch);
        }
    }

    char tag[4];
    if (is.read(tag, 4)) {
        if (std::string(tag, 4) != "ADAM") throw FormatError("unknown trailing chunk");
        AdamState<Real> st = AdamState<Real>::for_model(out.model);
        st.t = detail::read_u64(is);
        detail::read_blob(is, st.m.data(), st.m.size());
        detail::read_blob(is, st.v.data(), st.v.size());
        out.adam = std::move(st);
    }
    return out;
}

} // namespace n2n
