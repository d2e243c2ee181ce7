#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pnn/error.hpp"
#include "pnn/rng.hpp"
#include "pnn/tensor.hpp"

namespace pnn {

/// A named trainable (or tracked) tensor with its gradient and momentum
/// buffer. Running statistics of batch norm are registered with
/// trainable = false: they are swapped and serialized with the model but
/// never stepped by the optimizer and never counted as parameters.
template <typename T>
struct ParamTensor {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> momentum_buf;
    bool trainable = true;
    bool is_norm_param = false; // batch-norm gamma/beta (weight-decay switch)

    explicit ParamTensor(std::vector<std::size_t> shape, bool trainable_ = true)
        : value(shape), grad(shape), momentum_buf(std::move(shape)), trainable(trainable_) {}

    std::size_t numel() const { return value.numel(); }
    void zero_grad() { grad.fill(T(0)); }
};

/// Differentiable layer with explicit forward and backward passes.
/// forward caches whatever backward needs; backward consumes the cache of
/// the most recent forward and accumulates parameter gradients.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& input, bool train) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

    /// Registers this layer's parameters under `prefix` (e.g. "stem.conv.").
    virtual void collect_params(const std::string& prefix,
                                std::vector<ParamTensor<T>*>& out) {
        (void)prefix;
        (void)out;
    }

    /// Number of weighted layers on the main path (convs and dense layers;
    /// projection shortcuts do not count).
    virtual int weighted_layers() const { return 0; }
};

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Square-kernel 2-d cross-correlation without bias.
/// input [N,C,H,W], weight [F,C,k,k] -> output [N,F,H',W'] with
/// H' = floor((H + 2 pad - k)/stride) + 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                         std::size_t stride, std::size_t padding) {
    if (input.rank() != 4 || weight.rank() != 4)
        throw ShapeError("conv2d: input and weight must be 4-d");
    if (weight.dim(2) != weight.dim(3))
        throw ShapeError("conv2d: kernel must be square");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t f = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != c)
        throw ShapeError("conv2d: input has " + std::to_string(c) +
                         " channels but weight expects " + std::to_string(weight.dim(1)));
    if (h + 2 * padding < k || w + 2 * padding < k)
        throw ShapeError("conv2d: empty output (kernel larger than padded input)");
    const std::size_t oh = (h + 2 * padding - k) / stride + 1;
    const std::size_t ow = (w + 2 * padding - k) / stride + 1;

    Tensor<T> out({n, f, oh, ow});
    const long ih = static_cast<long>(h), iw = static_cast<long>(w);
    for (std::size_t in = 0; in < n; ++in)
        for (std::size_t of = 0; of < f; ++of)
            for (std::size_t ic = 0; ic < c; ++ic)
                for (std::size_t ki = 0; ki < k; ++ki)
                    for (std::size_t kj = 0; kj < k; ++kj) {
                        const T wv = weight.at4(of, ic, ki, kj);
                        if (wv == T(0)) continue;
                        for (std::size_t y = 0; y < oh; ++y) {
                            const long sy = static_cast<long>(y * stride + ki) - static_cast<long>(padding);
                            if (sy < 0 || sy >= ih) continue;
                            const T* src = &input.at4(in, ic, static_cast<std::size_t>(sy), 0);
                            T* dst = &out.at4(in, of, y, 0);
                            for (std::size_t x = 0; x < ow; ++x) {
                                const long sx = static_cast<long>(x * stride + kj) - static_cast<long>(padding);
                                if (sx < 0 || sx >= iw) continue;
                                dst[x] += wv * src[sx];
                            }
                        }
                    }
    return out;
}

/// Gradients of conv2d_forward. Accumulates into grad_weight; returns
/// the gradient with respect to the input.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                          const Tensor<T>& grad_out, Tensor<T>& grad_weight,
                          std::size_t stride, std::size_t padding) {
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t f = weight.dim(0), k = weight.dim(2);
    const std::size_t oh = grad_out.dim(2), ow = grad_out.dim(3);
    Tensor<T> grad_in(input.shape);
    const long ih = static_cast<long>(h), iw = static_cast<long>(w);

    for (std::size_t in = 0; in < n; ++in)
        for (std::size_t of = 0; of < f; ++of)
            for (std::size_t ic = 0; ic < c; ++ic)
                for (std::size_t ki = 0; ki < k; ++ki)
                    for (std::size_t kj = 0; kj < k; ++kj) {
                        const T wv = weight.at4(of, ic, ki, kj);
                        T dw = T(0);
                        for (std::size_t y = 0; y < oh; ++y) {
                            const long sy = static_cast<long>(y * stride + ki) - static_cast<long>(padding);
                            if (sy < 0 || sy >= ih) continue;
                            const T* src = &input.at4(in, ic, static_cast<std::size_t>(sy), 0);
                            T* gsrc = &grad_in.at4(in, ic, static_cast<std::size_t>(sy), 0);
                            const T* g = &grad_out.at4(in, of, y, 0);
                            for (std::size_t x = 0; x < ow; ++x) {
                                const long sx = static_cast<long>(x * stride + kj) - static_cast<long>(padding);
                                if (sx < 0 || sx >= iw) continue;
                                dw += g[x] * src[sx];
                                gsrc[sx] += g[x] * wv;
                            }
                        }
                        grad_weight.at4(of, ic, ki, kj) += dw;
                    }
    return grad_in;
}

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
           std::size_t stride, std::size_t padding)
        : weight_({out_ch, in_ch, kernel, kernel}), stride_(stride), padding_(padding) {}

    /// He normal initialization with fan-out scaling.
    void init_he(SeededRng& rng) {
        const std::size_t fan_out = weight_.value.dim(0) * weight_.value.dim(2) * weight_.value.dim(3);
        const double std = std::sqrt(2.0 / static_cast<double>(fan_out));
        for (auto& v : weight_.value.data) v = static_cast<T>(rng.normal() * std);
    }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        cached_input_ = input;
        return conv2d_forward(input, weight_.value, stride_, padding_);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        return conv2d_backward(cached_input_, weight_.value, grad_out,
                               weight_.grad, stride_, padding_);
    }

    void collect_params(const std::string& prefix,
                        std::vector<ParamTensor<T>*>& out) override {
        weight_.name = prefix + "weight";
        out.push_back(&weight_);
    }

    int weighted_layers() const override { return 1; }

    ParamTensor<T>& weight() { return weight_; }
    std::size_t stride() const { return stride_; }

private:
    ParamTensor<T> weight_;
    std::size_t stride_, padding_;
    Tensor<T> cached_input_;
};

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

/// Per-channel affine batch normalization state. Normalization in train
/// mode uses the biased batch variance; running_var tracks the unbiased
/// estimate, as the mainstream framework baselines do.
template <typename T>
struct BatchNormState {
    ParamTensor<T> gamma;
    ParamTensor<T> beta;
    ParamTensor<T> running_mean;
    ParamTensor<T> running_var;
    double eps = 1e-5;
    double momentum = 0.1;

    explicit BatchNormState(std::size_t channels)
        : gamma({channels}), beta({channels}),
          running_mean({channels}, false), running_var({channels}, false) {
        gamma.value.fill(T(1));
        running_var.value.fill(T(1));
        gamma.is_norm_param = true;
        beta.is_norm_param = true;
    }

    std::size_t channels() const { return gamma.numel(); }
};

/// Cache produced by a train-mode batchnorm forward, consumed by backward.
template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<double> inv_std; // per channel
    bool train = false;
};

/// Applies batch normalization to a [N,C,H,W] tensor. Train mode
/// normalizes by batch statistics and updates the running statistics in
/// `state`; eval mode normalizes by the running statistics.
template <typename T>
Tensor<T> batchnorm_apply(const Tensor<T>& input, BatchNormState<T>& state,
                          bool train, BatchNormCache<T>* cache = nullptr) {
    if (input.rank() != 4) throw ShapeError("batchnorm: input must be 4-d");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (c != state.channels())
        throw ShapeError("batchnorm: channel mismatch");
    const std::size_t m = n * h * w; // samples per channel
    if (train && m < 2)
        throw DataError("batchnorm: degenerate batch (need at least 2 values per channel in train mode)");

    Tensor<T> out(input.shape);
    if (cache) {
        cache->xhat = Tensor<T>(input.shape);
        cache->inv_std.assign(c, 0.0);
        cache->train = train;
    }

    for (std::size_t ch = 0; ch < c; ++ch) {
        double mean, var;
        if (train) {
            double s = 0.0;
            for (std::size_t in = 0; in < n; ++in)
                for (std::size_t y = 0; y < h; ++y) {
                    const T* p = &input.at4(in, ch, y, 0);
                    for (std::size_t x = 0; x < w; ++x) s += p[x];
                }
            mean = s / static_cast<double>(m);
            double sq = 0.0;
            for (std::size_t in = 0; in < n; ++in)
                for (std::size_t y = 0; y < h; ++y) {
                    const T* p = &input.at4(in, ch, y, 0);
                    for (std::size_t x = 0; x < w; ++x) {
                        const double d = p[x] - mean;
                        sq += d * d;
                    }
                }
            var = sq / static_cast<double>(m);
            const double unbiased = sq / static_cast<double>(m - 1);
            state.running_mean.value[ch] = static_cast<T>(
                (1.0 - state.momentum) * state.running_mean.value[ch] + state.momentum * mean);
            state.running_var.value[ch] = static_cast<T>(
                (1.0 - state.momentum) * state.running_var.value[ch] + state.momentum * unbiased);
        } else {
            mean = state.running_mean.value[ch];
            var = state.running_var.value[ch];
        }
        const double inv_std = 1.0 / std::sqrt(var + state.eps);
        const double g = state.gamma.value[ch], b = state.beta.value[ch];
        if (cache) cache->inv_std[ch] = inv_std;
        for (std::size_t in = 0; in < n; ++in)
            for (std::size_t y = 0; y < h; ++y) {
                const T* p = &input.at4(in, ch, y, 0);
                T* q = &out.at4(in, ch, y, 0);
                T* xh = cache ? &cache->xhat.at4(in, ch, y, 0) : nullptr;
                for (std::size_t x = 0; x < w; ++x) {
                    const double xhat = (p[x] - mean) * inv_std;
                    if (xh) xh[x] = static_cast<T>(xhat);
                    q[x] = static_cast<T>(g * xhat + b);
                }
            }
    }
    return out;
}

template <typename T>
class BatchNorm2d : public Layer<T> {
public:
    explicit BatchNorm2d(std::size_t channels) : state_(channels) {}

    Tensor<T> forward(const Tensor<T>& input, bool train) override {
        return batchnorm_apply(input, state_, train, &cache_);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        const std::size_t n = grad_out.dim(0), c = grad_out.dim(1);
        const std::size_t h = grad_out.dim(2), w = grad_out.dim(3);
        const double m = static_cast<double>(n * h * w);
        Tensor<T> grad_in(grad_out.shape);
        for (std::size_t ch = 0; ch < c; ++ch) {
            double dgamma = 0.0, dbeta = 0.0;
            for (std::size_t in = 0; in < n; ++in)
                for (std::size_t y = 0; y < h; ++y) {
                    const T* g = &grad_out.at4(in, ch, y, 0);
                    const T* xh = &cache_.xhat.at4(in, ch, y, 0);
                    for (std::size_t x = 0; x < w; ++x) {
                        dgamma += g[x] * xh[x];
                        dbeta += g[x];
                    }
                }
            state_.gamma.grad[ch] += static_cast<T>(dgamma);
            state_.beta.grad[ch] += static_cast<T>(dbeta);

            const double gi = state_.gamma.value[ch] * cache_.inv_std[ch];
            if (cache_.train) {
                const double mean_dy = dbeta / m;
                const double mean_dy_xhat = dgamma / m;
                for (std::size_t in = 0; in < n; ++in)
                    for (std::size_t y = 0; y < h; ++y) {
                        const T* g = &grad_out.at4(in, ch, y, 0);
                        const T* xh = &cache_.xhat.at4(in, ch, y, 0);
                        T* o = &grad_in.at4(in, ch, y, 0);
                        for (std::size_t x = 0; x < w; ++x)
                            o[x] = static_cast<T>(gi * (g[x] - mean_dy - xh[x] * mean_dy_xhat));
                    }
            } else {
                for (std::size_t in = 0; in < n; ++in)
                    for (std::size_t y = 0; y < h; ++y) {
                        const T* g = &grad_out.at4(in, ch, y, 0);
                        T* o = &grad_in.at4(in, ch, y, 0);
                        for (std::size_t x = 0; x < w; ++x)
                            o[x] = static_cast<T>(gi * g[x]);
                    }
            }
        }
        return grad_in;
    }

    void collect_params(const std::string& prefix,
                        std::vector<ParamTensor<T>*>& out) override {
        state_.gamma.name = prefix + "gamma";
        state_.beta.name = prefix + "beta";
        state_.running_mean.name = prefix + "running_mean";
        state_.running_var.name = prefix + "running_var";
        out.push_back(&state_.gamma);
        out.push_back(&state_.beta);
        out.push_back(&state_.running_mean);
        out.push_back(&state_.running_var);
    }

    BatchNormState<T>& state() { return state_; }

private:
    BatchNormState<T> state_;
    BatchNormCache<T> cache_;
};

// ---------------------------------------------------------------------------
// Pointwise and reduction layers
// ---------------------------------------------------------------------------

template <typename T>
class ReLU : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& input, bool) override {
        mask_.assign(input.numel(), false);
        Tensor<T> out(input.shape);
        for (std::size_t i = 0; i < input.numel(); ++i) {
            if (input[i] > T(0)) {
                out[i] = input[i];
                mask_[i] = true;
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        Tensor<T> grad_in(grad_out.shape);
        for (std::size_t i = 0; i < grad_out.numel(); ++i)
            grad_in[i] = mask_[i] ? grad_out[i] : T(0);
        return grad_in;
    }

private:
    std::vector<bool> mask_;
};

/// [N,C,H,W] -> [N,C] spatial mean.
template <typename T>
class GlobalAvgPool : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& input, bool) override {
        in_shape_ = input.shape;
        const std::size_t n = input.dim(0), c = input.dim(1);
        const std::size_t hw = input.dim(2) * input.dim(3);
        Tensor<T> out({n, c});
        for (std::size_t in = 0; in < n; ++in)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                const T* p = &input.at4(in, ch, 0, 0);
                for (std::size_t i = 0; i < hw; ++i) s += p[i];
                out.at2(in, ch) = static_cast<T>(s / static_cast<double>(hw));
            }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        Tensor<T> grad_in(in_shape_);
        const std::size_t n = in_shape_[0], c = in_shape_[1];
        const std::size_t hw = in_shape_[2] * in_shape_[3];
        const T scale = static_cast<T>(1.0 / static_cast<double>(hw));
        for (std::size_t in = 0; in < n; ++in)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const T g = grad_out.at2(in, ch) * scale;
                T* p = &grad_in.at4(in, ch, 0, 0);
                for (std::size_t i = 0; i < hw; ++i) p[i] = g;
            }
        return grad_in;
    }

private:
    std::vector<std::size_t> in_shape_;
};

/// Fully connected layer: y = x W^T + b, weight [out,in].
template <typename T>
class Dense : public Layer<T> {
public:
    Dense(std::size_t in_features, std::size_t out_features)
        : weight_({out_features, in_features}), bias_({out_features}) {}

    /// He normal initialization with fan-in scaling; bias starts at zero.
    void init_he(SeededRng& rng) {
        const double std = std::sqrt(2.0 / static_cast<double>(weight_.value.dim(1)));
        for (auto& v : weight_.value.data) v = static_cast<T>(rng.normal() * std);
        bias_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        if (input.rank() != 2 || input.dim(1) != weight_.value.dim(1))
            throw ShapeError("dense: expected [N," + std::to_string(weight_.value.dim(1)) +
                             "] input, got " + input.shape_str());
        cached_input_ = input;
        const std::size_t n = input.dim(0), in_f = weight_.value.dim(1), out_f = weight_.value.dim(0);
        Tensor<T> out({n, out_f});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out_f; ++o) {
                double s = bias_.value[o];
                const T* x = &input.at2(i, 0);
                const T* wrow = &weight_.value.at2(o, 0);
                for (std::size_t j = 0; j < in_f; ++j) s += double(x[j]) * double(wrow[j]);
                out.at2(i, o) = static_cast<T>(s);
            }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        const std::size_t n = cached_input_.dim(0);
        const std::size_t in_f = weight_.value.dim(1), out_f = weight_.value.dim(0);
        Tensor<T> grad_in({n, in_f});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out_f; ++o) {
                const T g = grad_out.at2(i, o);
                bias_.grad[o] += g;
                const T* x = &cached_input_.at2(i, 0);
                T* wg = &weight_.grad.at2(o, 0);
                const T* wrow = &weight_.value.at2(o, 0);
                T* gi = &grad_in.at2(i, 0);
                for (std::size_t j = 0; j < in_f; ++j) {
                    wg[j] += g * x[j];
                    gi[j] += g * wrow[j];
                }
            }
        return grad_in;
    }

    void collect_params(const std::string& prefix,
                        std::vector<ParamTensor<T>*>& out) override {
        weight_.name = prefix + "weight";
        bias_.name = prefix + "bias";
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    int weighted_layers() const override { return 1; }

private:
    ParamTensor<T> weight_;
    ParamTensor<T> bias_;
    Tensor<T> cached_input_;
};

// ---------------------------------------------------------------------------
// Softmax cross-entropy
// ---------------------------------------------------------------------------

template <typename T>
struct SoftmaxLoss {
    double loss = 0.0;
    Tensor<T> probs;
};

/// Numerically stable softmax + mean cross-entropy over the batch.
/// Row computations run in double regardless of T.
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N,K]");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n)
        throw ShapeError("softmax_cross_entropy: label count mismatch");
    SoftmaxLoss<T> res;
    res.probs = Tensor<T>({n, k});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
            throw DataError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                            " out of range [0," + std::to_string(k) + ") at row " + std::to_string(i));
        const T* row = &logits.at2(i, 0);
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(double(row[j]) - mx);
        const double logz = std::log(z);
        for (std::size_t j = 0; j < k; ++j)
            res.probs.at2(i, j) = static_cast<T>(std::exp(double(row[j]) - mx - logz));
        total += -(double(row[static_cast<std::size_t>(labels[i])]) - mx - logz);
    }
    res.loss = total / static_cast<double>(n);
    return res;
}

/// d(loss)/d(logits) for the mean cross-entropy above: (p - onehot)/N.
template <typename T>
Tensor<T> softmax_cross_entropy_backward(const Tensor<T>& probs, const std::vector<int>& labels) {
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    Tensor<T> grad({n, k});
    const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            T v = probs.at2(i, j);
            if (j == static_cast<std::size_t>(labels[i])) v -= T(1);
            grad.at2(i, j) = v * inv_n;
        }
    return grad;
}

} // namespace pnn
