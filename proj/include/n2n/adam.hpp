#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "n2n/error.hpp"
#include "n2n/model.hpp"

namespace n2n {

// Moment accumulators aligned element-for-element with FcnnModel::params.
template <typename Real>
struct AdamState {
    std::vector<Real> m;
    std::vector<Real> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr = 0.0004;

    static AdamState for_model(const FcnnModel<Real>& model, double lr = 0.0004) {
        AdamState s;
        s.m.assign(model.params.size(), Real(0));
        s.v.assign(model.params.size(), Real(0));
        s.lr = lr;
        return s;
    }
};

// One Adam update with bias correction. A non-finite gradient aborts before
// anything is mutated, so the caller can persist the last good state.
template <typename Real>
void adam_step(FcnnModel<Real>& model, const std::vector<Real>& grads, AdamState<Real>& state) {
    if (grads.size() != model.params.size() || state.m.size() != model.params.size())
        throw ShapeError("adam_step: gradient/state size mismatch");
    for (const Real g : grads)
        if (!std::isfinite(static_cast<double>(g)))
            throw NumericFault("adam_step: non-finite gradient");

    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
        const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
        state.m[i] = static_cast<Real>(m);
        state.v[i] = static_cast<Real>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        model.params[i] = static_cast<Real>(static_cast<double>(model.params[i]) -
                                            state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
}

} // namespace n2n
