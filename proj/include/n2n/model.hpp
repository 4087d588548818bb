#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "n2n/error.hpp"
#include "n2n/rng.hpp"
#include "n2n/tensor.hpp"

namespace n2n {

enum class LayerKind : std::uint32_t { conv = 0, batch_norm = 1, leaky_relu = 2, tanh_out = 3 };

struct LayerSpec {
    LayerKind kind;
    std::uint32_t k = 0;      // kernel length (conv only)
    std::uint32_t in_ch = 0;  // conv: input channels; bn/activations: channel count
    std::uint32_t out_ch = 0;
};

// Network family: a first conv (1 -> channels), a run of middle convs
// (channels -> channels), each followed by batch norm + leaky ReLU, and a
// 1x1 conv head into tanh. conv_layers counts all convolutions.
struct ArchConfig {
    std::uint32_t conv_layers = 6;
    std::uint32_t channels = 55;
    std::uint32_t kernel = 30;
    double leaky_slope = 0.01;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1; // weight of the new batch statistic

    // Input samples that can influence one output sample.
    std::uint32_t receptive_field() const { return (conv_layers - 1) * (kernel - 1) + 1; }
};

namespace detail {

inline std::vector<LayerSpec> build_layer_specs(const ArchConfig& arch) {
    if (arch.conv_layers < 2 || arch.channels == 0 || arch.kernel == 0)
        throw ConfigError("architecture needs >= 2 conv layers and nonzero channels/kernel");
    std::vector<LayerSpec> specs;
    for (std::uint32_t i = 0; i + 1 < arch.conv_layers; ++i) {
        const std::uint32_t in = (i == 0) ? 1 : arch.channels;
        specs.push_back({LayerKind::conv, arch.kernel, in, arch.channels});
        specs.push_back({LayerKind::batch_norm, 0, arch.channels, arch.channels});
        specs.push_back({LayerKind::leaky_relu, 0, arch.channels, arch.channels});
    }
    specs.push_back({LayerKind::conv, 1, arch.channels, 1});
    specs.push_back({LayerKind::tanh_out, 0, 1, 1});
    return specs;
}

} // namespace detail

// All trainable parameters live in one flat buffer (conv kernel then bias,
// bn gamma then beta, in layer order); batch-norm running statistics live in
// a separate buffer (mean then variance, in layer order). The flat layout is
// what the optimizer and the model file iterate over.
template <typename Real>
struct FcnnModel {
    ArchConfig arch;
    std::vector<LayerSpec> specs;
    std::vector<Real> params;
    std::vector<Real> buffers;
    std::vector<std::size_t> param_offset;  // per spec index
    std::vector<std::size_t> buffer_offset; // per spec index
    std::uint64_t rng_seed = 0;

    static std::size_t param_count(const LayerSpec& s) {
        switch (s.kind) {
            case LayerKind::conv: return static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch + s.out_ch;
            case LayerKind::batch_norm: return 2 * static_cast<std::size_t>(s.out_ch);
            default: return 0;
        }
    }
    static std::size_t buffer_count(const LayerSpec& s) {
        return s.kind == LayerKind::batch_norm ? 2 * static_cast<std::size_t>(s.out_ch) : 0;
    }

    // kernel (k, in_ch, out_ch) row-major with out_ch fastest, then bias
    Real* conv_kernel(std::size_t i) { return params.data() + param_offset[i]; }
    const Real* conv_kernel(std::size_t i) const { return params.data() + param_offset[i]; }
    Real* conv_bias(std::size_t i) {
        const auto& s = specs[i];
        return params.data() + param_offset[i] + static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
    }
    const Real* conv_bias(std::size_t i) const {
        const auto& s = specs[i];
        return params.data() + param_offset[i] + static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
    }

    Real* bn_gamma(std::size_t i) { return params.data() + param_offset[i]; }
    const Real* bn_gamma(std::size_t i) const { return params.data() + param_offset[i]; }
    Real* bn_beta(std::size_t i) { return params.data() + param_offset[i] + specs[i].out_ch; }
    const Real* bn_beta(std::size_t i) const { return params.data() + param_offset[i] + specs[i].out_ch; }
    Real* bn_running_mean(std::size_t i) { return buffers.data() + buffer_offset[i]; }
    const Real* bn_running_mean(std::size_t i) const { return buffers.data() + buffer_offset[i]; }
    Real* bn_running_var(std::size_t i) { return buffers.data() + buffer_offset[i] + specs[i].out_ch; }
    const Real* bn_running_var(std::size_t i) const { return buffers.data() + buffer_offset[i] + specs[i].out_ch; }
};

// Kaiming-style uniform init for the conv kernels, bound
// sqrt(6 / (fan_in * (1 + slope^2))); biases 0, gamma 1, beta 0, running
// mean 0, running variance 1. Deterministic for a given seed.
template <typename Real = float>
FcnnModel<Real> init_model(std::uint64_t seed, const ArchConfig& arch = {}) {
    FcnnModel<Real> m;
    m.arch = arch;
    m.specs = detail::build_layer_specs(arch);
    m.rng_seed = seed;
    std::size_t p_total = 0, b_total = 0;
    for (const auto& s : m.specs) {
        m.param_offset.push_back(p_total);
        m.buffer_offset.push_back(b_total);
        p_total += FcnnModel<Real>::param_count(s);
        b_total += FcnnModel<Real>::buffer_count(s);
    }
    m.params.assign(p_total, Real(0));
    m.buffers.assign(b_total, Real(0));

    Rng rng(seed);
    for (std::size_t i = 0; i < m.specs.size(); ++i) {
        const auto& s = m.specs[i];
        if (s.kind == LayerKind::conv) {
            const double fan_in = static_cast<double>(s.k) * s.in_ch;
            const double b = std::sqrt(6.0 / (fan_in * (1.0 + arch.leaky_slope * arch.leaky_slope)));
            Real* k = m.conv_kernel(i);
            const std::size_t n = static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
            for (std::size_t j = 0; j < n; ++j) k[j] = static_cast<Real>(rng.uniform(-b, b));
            // bias already zero
        } else if (s.kind == LayerKind::batch_norm) {
            Real* g = m.bn_gamma(i);
            for (std::uint32_t c = 0; c < s.out_ch; ++c) g[c] = Real(1);
            Real* rv = m.bn_running_var(i);
            for (std::uint32_t c = 0; c < s.out_ch; ++c) rv[c] = Real(1);
        }
    }
    return m;
}

enum class RunMode { train, infer };

// Per-batch state saved by a training-mode forward pass for the backward
// pass: layer inputs for conv/bn layers, batch statistics, and the output.
template <typename Real>
struct ForwardTrace {
    std::vector<Tensor3<Real>> inputs;          // indexed by spec; empty for activations
    std::vector<std::vector<Real>> bn_mean;     // indexed by spec; per-channel
    std::vector<std::vector<Real>> bn_inv_std;  // indexed by spec; 1/sqrt(var+eps)
    Tensor3<Real> output;
};

namespace detail {

template <typename Real>
void conv1d_forward_into(const Tensor3<Real>& x, const LayerSpec& s, const Real* kernel,
                         const Real* bias, Tensor3<Real>& out) {
    if (x.channels != s.in_ch) throw ShapeError("conv1d_forward: channel mismatch");
    const std::size_t B = x.batch, T = x.time, Ci = s.in_ch, Co = s.out_ch, K = s.k;
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((K - 1) / 2);
    out = Tensor3<Real>(B, T, Co);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            Real* o = out.row(b, t);
            for (std::size_t c = 0; c < Co; ++c) o[c] = bias[c];
            for (std::size_t d = 0; d < K; ++d) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + d) - off;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
                const Real* xr = x.row(b, static_cast<std::size_t>(src));
                const Real* kd = kernel + d * Ci * Co;
                for (std::size_t c = 0; c < Ci; ++c) {
                    const Real xv = xr[c];
                    const Real* kc = kd + c * Co;
                    for (std::size_t oc = 0; oc < Co; ++oc) o[oc] += xv * kc[oc];
                }
            }
        }
    }
}

// Gradients of conv1d_forward_into. grad_kernel/grad_bias are accumulated
// into caller-zeroed storage; grad_x is overwritten.
template <typename Real>
void conv1d_backward_into(const Tensor3<Real>& x, const LayerSpec& s, const Real* kernel,
                          const Tensor3<Real>& grad_out, Tensor3<Real>& grad_x,
                          Real* grad_kernel, Real* grad_bias) {
    if (x.channels != s.in_ch || grad_out.channels != s.out_ch || grad_out.batch != x.batch ||
        grad_out.time != x.time)
        throw ShapeError("conv1d_backward: shape mismatch");
    const std::size_t B = x.batch, T = x.time, Ci = s.in_ch, Co = s.out_ch, K = s.k;
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>((K - 1) / 2);
    grad_x = Tensor3<Real>(B, T, Ci);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const Real* g = grad_out.row(b, t);
            for (std::size_t oc = 0; oc < Co; ++oc) grad_bias[oc] += g[oc];
            for (std::size_t d = 0; d < K; ++d) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + d) - off;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
                const Real* xr = x.row(b, static_cast<std::size_t>(src));
                Real* gx = grad_x.row(b, static_cast<std::size_t>(src));
                const Real* kd = kernel + d * Ci * Co;
                Real* gk = grad_kernel + d * Ci * Co;
                for (std::size_t c = 0; c < Ci; ++c) {
                    const Real xv = xr[c];
                    const Real* kc = kd + c * Co;
                    Real* gkc = gk + c * Co;
                    Real acc = Real(0);
                    for (std::size_t oc = 0; oc < Co; ++oc) {
                        gkc[oc] += xv * g[oc];
                        acc += kc[oc] * g[oc];
                    }
                    gx[c] += acc;
                }
            }
        }
    }
}

} // namespace detail

// Standalone conv layer ops (the building block the model is made of).
template <typename Real>
Tensor3<Real> conv1d_forward(const Tensor3<Real>& x, const LayerSpec& s, const Real* kernel,
                             const Real* bias) {
    Tensor3<Real> out;
    detail::conv1d_forward_into(x, s, kernel, bias, out);
    return out;
}

template <typename Real>
struct ConvGrads {
    Tensor3<Real> grad_x;
    std::vector<Real> grad_kernel;
    std::vector<Real> grad_bias;
};

template <typename Real>
ConvGrads<Real> conv1d_backward(const Tensor3<Real>& x, const LayerSpec& s, const Real* kernel,
                                const Tensor3<Real>& grad_out) {
    ConvGrads<Real> g;
    g.grad_kernel.assign(static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch, Real(0));
    g.grad_bias.assign(s.out_ch, Real(0));
    detail::conv1d_backward_into(x, s, kernel, grad_out, g.grad_x, g.grad_kernel.data(),
                                 g.grad_bias.data());
    return g;
}

// Batch normalization over (batch, time) per channel. Training mode uses the
// biased batch variance and folds it into the running statistics with weight
// bn_momentum; inference mode reads only the running statistics.
template <typename Real>
Tensor3<Real> batchnorm_forward(const Tensor3<Real>& x, const Real* gamma, const Real* beta,
                                Real* running_mean, Real* running_var, double eps,
                                double momentum, RunMode mode, bool update_running = true,
                                std::type_identity_t<std::vector<Real>>* saved_mean = nullptr,
                                std::type_identity_t<std::vector<Real>>* saved_inv_std = nullptr) {
    const std::size_t B = x.batch, T = x.time, C = x.channels;
    const std::size_t N = B * T;
    Tensor3<Real> out(B, T, C);
    if (mode == RunMode::train) {
        if (N < 2) throw SizeError("batchnorm_forward: need batch*time >= 2 in train mode");
        std::vector<Real> mean(C, Real(0)), var(C, Real(0));
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const Real* r = x.row(b, t);
                for (std::size_t c = 0; c < C; ++c) mean[c] += r[c];
            }
        for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<Real>(N);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const Real* r = x.row(b, t);
                for (std::size_t c = 0; c < C; ++c) {
                    const Real d = r[c] - mean[c];
                    var[c] += d * d;
                }
            }
        for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<Real>(N);

        std::vector<Real> inv_std(C);
        for (std::size_t c = 0; c < C; ++c)
            inv_std[c] = Real(1) / std::sqrt(var[c] + static_cast<Real>(eps));
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const Real* r = x.row(b, t);
                Real* o = out.row(b, t);
                for (std::size_t c = 0; c < C; ++c)
                    o[c] = gamma[c] * (r[c] - mean[c]) * inv_std[c] + beta[c];
            }
        if (update_running) {
            const Real a = static_cast<Real>(momentum);
            for (std::size_t c = 0; c < C; ++c) {
                running_mean[c] = (Real(1) - a) * running_mean[c] + a * mean[c];
                running_var[c] = (Real(1) - a) * running_var[c] + a * var[c];
            }
        }
        if (saved_mean) *saved_mean = std::move(mean);
        if (saved_inv_std) *saved_inv_std = std::move(inv_std);
    } else {
        std::vector<Real> scale(C), shift(C);
        for (std::size_t c = 0; c < C; ++c) {
            const Real inv = Real(1) / std::sqrt(running_var[c] + static_cast<Real>(eps));
            scale[c] = gamma[c] * inv;
            shift[c] = beta[c] - scale[c] * running_mean[c];
        }
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
                const Real* r = x.row(b, t);
                Real* o = out.row(b, t);
                for (std::size_t c = 0; c < C; ++c) o[c] = scale[c] * r[c] + shift[c];
            }
    }
    return out;
}

// Backward through training-mode batch norm.
template <typename Real>
Tensor3<Real> batchnorm_backward(const Tensor3<Real>& x, const Real* gamma,
                                 const std::vector<Real>& mean, const std::vector<Real>& inv_std,
                                 const Tensor3<Real>& grad_out, Real* grad_gamma, Real* grad_beta) {
    const std::size_t B = x.batch, T = x.time, C = x.channels;
    const Real N = static_cast<Real>(B * T);
    // per-channel sums of dy and dy*xhat
    std::vector<Real> sum_dy(C, Real(0)), sum_dy_xhat(C, Real(0));
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            const Real* r = x.row(b, t);
            const Real* g = grad_out.row(b, t);
            for (std::size_t c = 0; c < C; ++c) {
                const Real xhat = (r[c] - mean[c]) * inv_std[c];
                sum_dy[c] += g[c];
                sum_dy_xhat[c] += g[c] * xhat;
            }
        }
    for (std::size_t c = 0; c < C; ++c) {
        grad_beta[c] += sum_dy[c];
        grad_gamma[c] += sum_dy_xhat[c];
    }
    Tensor3<Real> grad_x(B, T, C);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            const Real* r = x.row(b, t);
            const Real* g = grad_out.row(b, t);
            Real* gx = grad_x.row(b, t);
            for (std::size_t c = 0; c < C; ++c) {
                const Real xhat = (r[c] - mean[c]) * inv_std[c];
                gx[c] = gamma[c] * inv_std[c] *
                        (g[c] - sum_dy[c] / N - xhat * sum_dy_xhat[c] / N);
            }
        }
    return grad_x;
}

template <typename Real>
void leaky_relu_forward_inplace(Tensor3<Real>& x, double slope) {
    const Real a = static_cast<Real>(slope);
    for (Real& v : x.data) v = v >= Real(0) ? v : a * v;
}

// leaky ReLU is sign-preserving, so the saved *output* determines the branch.
template <typename Real>
void leaky_relu_backward_inplace(const Tensor3<Real>& out, Tensor3<Real>& grad, double slope) {
    const Real a = static_cast<Real>(slope);
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (out.data[i] < Real(0)) grad.data[i] *= a;
}

template <typename Real>
void tanh_forward_inplace(Tensor3<Real>& x) {
    for (Real& v : x.data) v = std::tanh(v);
}

template <typename Real>
void tanh_backward_inplace(const Tensor3<Real>& out, Tensor3<Real>& grad) {
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        grad.data[i] *= Real(1) - out.data[i] * out.data[i];
}

// Full forward pass. In train mode a ForwardTrace must be supplied; running
// statistics are updated unless update_running is false.
template <typename Real>
Tensor3<Real> fcnn_forward(FcnnModel<Real>& model, const Tensor3<Real>& x, RunMode mode,
                           ForwardTrace<Real>* trace = nullptr, bool update_running = true) {
    if (x.channels != 1) throw ShapeError("fcnn_forward: input must have 1 channel");
    if (mode == RunMode::train && !trace)
        throw ShapeError("fcnn_forward: train mode needs a trace");
    if (trace) {
        trace->inputs.assign(model.specs.size(), {});
        trace->bn_mean.assign(model.specs.size(), {});
        trace->bn_inv_std.assign(model.specs.size(), {});
    }
    Tensor3<Real> cur = x;
    for (std::size_t i = 0; i < model.specs.size(); ++i) {
        const auto& s = model.specs[i];
        switch (s.kind) {
            case LayerKind::conv: {
                if (trace) trace->inputs[i] = cur;
                Tensor3<Real> out;
                detail::conv1d_forward_into(cur, s, model.conv_kernel(i), model.conv_bias(i), out);
                cur = std::move(out);
                break;
            }
            case LayerKind::batch_norm: {
                if (trace) trace->inputs[i] = cur;
                cur = batchnorm_forward(cur, model.bn_gamma(i), model.bn_beta(i),
                                        model.bn_running_mean(i), model.bn_running_var(i),
                                        model.arch.bn_eps, model.arch.bn_momentum, mode,
                                        update_running && mode == RunMode::train,
                                        trace ? &trace->bn_mean[i] : nullptr,
                                        trace ? &trace->bn_inv_std[i] : nullptr);
                break;
            }
            case LayerKind::leaky_relu:
                leaky_relu_forward_inplace(cur, model.arch.leaky_slope);
                break;
            case LayerKind::tanh_out:
                tanh_forward_inplace(cur);
                break;
        }
    }
    if (trace) trace->output = cur;
    return cur;
}

// Read-only forward for inference on a const model.
template <typename Real>
Tensor3<Real> fcnn_infer(const FcnnModel<Real>& model, const Tensor3<Real>& x) {
    return fcnn_forward(const_cast<FcnnModel<Real>&>(model), x, RunMode::infer,
                        static_cast<ForwardTrace<Real>*>(nullptr), false);
}

// Backward pass; returns the gradient w.r.t. every trainable parameter,
// laid out exactly like model.params.
template <typename Real>
std::vector<Real> fcnn_backward(FcnnModel<Real>& model, const ForwardTrace<Real>& trace,
                                const Tensor3<Real>& grad_output) {
    std::vector<Real> grads(model.params.size(), Real(0));
    Tensor3<Real> g = grad_output;
    for (std::size_t idx = model.specs.size(); idx-- > 0;) {
        const auto& s = model.specs[idx];
        switch (s.kind) {
            case LayerKind::tanh_out:
                tanh_backward_inplace(trace.output, g);
                break;
            case LayerKind::leaky_relu:
                // the activation output is the next conv layer's saved input
                leaky_relu_backward_inplace(trace.inputs[idx + 1], g, model.arch.leaky_slope);
                break;
            case LayerKind::batch_norm: {
                Tensor3<Real> gx = batchnorm_backward(
                    trace.inputs[idx], model.bn_gamma(idx), trace.bn_mean[idx],
                    trace.bn_inv_std[idx], g, grads.data() + model.param_offset[idx],
                    grads.data() + model.param_offset[idx] + s.out_ch);
                g = std::move(gx);
                break;
            }
            case LayerKind::conv: {
                Tensor3<Real> gx;
                Real* gk = grads.data() + model.param_offset[idx];
                Real* gb = gk + static_cast<std::size_t>(s.k) * s.in_ch * s.out_ch;
                detail::conv1d_backward_into(trace.inputs[idx], s, model.conv_kernel(idx), g, gx,
                                             gk, gb);
                g = std::move(gx);
                break;
            }
        }
    }
    return grads;
}

// Mean-squared-error loss over all elements plus its gradient.
template <typename Real>
std::pair<double, Tensor3<Real>> mse_loss(const Tensor3<Real>& pred, const Tensor3<Real>& target) {
    if (!pred.same_shape(target)) throw ShapeError("mse_loss: shape mismatch");
    const double count = static_cast<double>(pred.size());
    double loss = 0.0;
    Tensor3<Real> grad(pred.batch, pred.time, pred.channels);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        loss += d * d;
        grad.data[i] = static_cast<Real>(2.0 * d / count);
    }
    return {loss / count, std::move(grad)};
}

} // namespace n2n
