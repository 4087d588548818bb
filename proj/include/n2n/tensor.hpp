#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "n2n/error.hpp"

namespace n2n {

// Dense (batch, time, channels) tensor, row-major with channels fastest.
template <typename Real>
struct Tensor3 {
    std::vector<Real> data;
    std::size_t batch = 0, time = 0, channels = 0;

    Tensor3() = default;
    Tensor3(std::size_t b, std::size_t t, std::size_t c)
        : data(b * t * c, Real(0)), batch(b), time(t), channels(c) {}

    std::size_t size() const { return data.size(); }

    Real* row(std::size_t b, std::size_t t) {
        return data.data() + (b * time + t) * channels;
    }
    const Real* row(std::size_t b, std::size_t t) const {
        return data.data() + (b * time + t) * channels;
    }

    Real& at(std::size_t b, std::size_t t, std::size_t c) { return row(b, t)[c]; }
    Real at(std::size_t b, std::size_t t, std::size_t c) const { return row(b, t)[c]; }

    bool same_shape(const Tensor3& o) const {
        return batch == o.batch && time == o.time && channels == o.channels;
    }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

} // namespace n2n
