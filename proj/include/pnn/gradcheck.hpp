#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pnn/layers.hpp"

namespace pnn {

/// Wraps softmax cross-entropy as a Layer whose forward output is the
/// scalar loss, so it can go through gradient_check like any other layer.
class SoftmaxXentProbe : public Layer<double> {
public:
    explicit SoftmaxXentProbe(std::vector<int> labels) : labels_(std::move(labels)) {}

    Tensor<double> forward(const Tensor<double>& input, bool) override {
        auto res = softmax_cross_entropy(input, labels_);
        probs_ = std::move(res.probs);
        return Tensor<double>({1}, {res.loss});
    }

    Tensor<double> backward(const Tensor<double>& grad_out) override {
        Tensor<double> g = softmax_cross_entropy_backward(probs_, labels_);
        for (auto& v : g.data) v *= grad_out[0];
        return g;
    }

private:
    std::vector<int> labels_;
    Tensor<double> probs_;
};

/// Central-difference gradient verification, run in 64-bit mode.
///
/// Projects the layer output onto a fixed random direction c so the check
/// reduces to a scalar loss L = sum(c * y), then compares the analytic
/// gradients (backward pass) of L with central differences over every
/// input element and every trainable parameter element. Returns the
/// maximum relative error max |analytic - numeric| / max(|a|, |n|, 1e-8).
inline double gradient_check(Layer<double>& layer, Tensor<double> input,
                             double eps, SeededRng& rng, bool train_mode = true) {
    std::vector<ParamTensor<double>*> params;
    layer.collect_params("p.", params);

    Tensor<double> y0 = layer.forward(input, train_mode);
    if (!y0.all_finite())
        throw NumericError("gradient_check: non-finite forward output");
    Tensor<double> proj(y0.shape);
    for (auto& v : proj.data) v = rng.uniform() * 2.0 - 1.0;

    const auto loss_of = [&]() {
        Tensor<double> y = layer.forward(input, train_mode);
        double s = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) s += proj[i] * y[i];
        return s;
    };

    for (auto* p : params) p->zero_grad();
    layer.forward(input, train_mode); // refresh caches before backward
    Tensor<double> grad_in = layer.backward(proj);

    double max_rel = 0.0;
    const auto update = [&](double analytic, double numeric, const std::string& where) {
        if (!std::isfinite(analytic) || !std::isfinite(numeric))
            throw NumericError("gradient_check: non-finite gradient at " + where);
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    };

    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double saved = input[i];
        input[i] = saved + eps;
        const double lp = loss_of();
        input[i] = saved - eps;
        const double lm = loss_of();
        input[i] = saved;
        update(grad_in[i], (lp - lm) / (2.0 * eps), "input[" + std::to_string(i) + "]");
    }

    for (auto* p : params) {
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->numel(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + eps;
            const double lp = loss_of();
            p->value[i] = saved - eps;
            const double lm = loss_of();
            p->value[i] = saved;
            update(p->grad[i], (lp - lm) / (2.0 * eps), p->name);
        }
    }
    return max_rel;
}

} // namespace pnn
