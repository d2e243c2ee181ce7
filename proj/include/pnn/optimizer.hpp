#pragma once

#include <cmath>
#include <vector>

#include "pnn/error.hpp"
#include "pnn/layers.hpp"

namespace pnn {

/// SGD hyperparameters. Defaults mirror the reference training recipe
/// (lr 0.1, momentum 0.9, weight decay 1e-4, batch 128, 200 epochs).
struct OptimizerConfig {
    double base_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 128;
    int total_epochs = 200;
    bool weight_decay_on_bn = true; // set false to exempt gamma/beta

    void validate() const {
        if (base_lr <= 0) throw ConfigError("optimizer: base_lr must be positive");
        if (momentum < 0 || momentum >= 1) throw ConfigError("optimizer: momentum must be in [0,1)");
        if (weight_decay < 0) throw ConfigError("optimizer: weight_decay must be >= 0");
        if (batch_size < 1) throw ConfigError("optimizer: batch_size must be >= 1");
        if (total_epochs < 1) throw ConfigError("optimizer: total_epochs must be >= 1");
    }
};

/// Cosine annealing from base_lr at epoch 0 to 0 at total_epochs:
/// lr = 0.5 * base_lr * (1 + cos(pi * epoch / total_epochs)).
inline double cosine_lr(long epoch, long total_epochs, double base_lr) {
    if (total_epochs <= 0) throw ConfigError("cosine_lr: total_epochs must be positive");
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return 0.5 * base_lr * (1.0 + std::cos(3.14159265358979323846 * t));
}

/// One SGD-with-momentum update over the trainable parameters:
///   buf <- momentum * buf + (grad + weight_decay * value)
///   value <- value - lr * buf
/// Gradients are cleared afterwards. Running statistics (non-trainable
/// entries) are untouched.
template <typename T>
void sgd_step(const std::vector<ParamTensor<T>*>& params, double lr,
              const OptimizerConfig& cfg) {
    for (auto* p : params) {
        if (!p->trainable) continue;
        const double wd = (p->is_norm_param && !cfg.weight_decay_on_bn) ? 0.0 : cfg.weight_decay;
        for (std::size_t i = 0; i < p->numel(); ++i) {
            const double g = p->grad[i];
            if (!std::isfinite(g))
                throw NumericError("sgd_step: non-finite gradient in " + p->name);
            const double buf = cfg.momentum * p->momentum_buf[i] + (g + wd * p->value[i]);
            p->momentum_buf[i] = static_cast<T>(buf);
            p->value[i] = static_cast<T>(p->value[i] - lr * buf);
        }
        p->zero_grad();
    }
}

} // namespace pnn
