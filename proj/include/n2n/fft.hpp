#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "n2n/error.hpp"

namespace n2n {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse
// (no scaling applied here).
inline void fft_inplace(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace detail

// Forward real FFT. x is zero-padded to n_fft; returns bins 0..n_fft/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n_fft) {
    if (!detail::is_pow2(n_fft)) throw SizeError("rfft: n_fft must be a power of two");
    if (x.size() > n_fft) throw SizeError("rfft: input longer than n_fft");
    std::vector<std::complex<double>> a(n_fft, {0.0, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
    detail::fft_inplace(a, -1);
    a.resize(n_fft / 2 + 1);
    return a;
}

// Inverse of rfft; returns the n_fft real samples.
inline std::vector<double> irfft(std::span<const std::complex<double>> spec, std::size_t n_fft) {
    if (!detail::is_pow2(n_fft)) throw SizeError("irfft: n_fft must be a power of two");
    if (spec.size() != n_fft / 2 + 1) throw SizeError("irfft: expected n_fft/2+1 bins");
    std::vector<std::complex<double>> a(n_fft);
    for (std::size_t k = 0; k <= n_fft / 2; ++k) a[k] = spec[k];
    for (std::size_t k = n_fft / 2 + 1; k < n_fft; ++k) a[k] = std::conj(spec[n_fft - k]);
    detail::fft_inplace(a, +1);
    std::vector<double> out(n_fft);
    const double inv = 1.0 / static_cast<double>(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i) out[i] = a[i].real() * inv;
    return out;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace n2n
