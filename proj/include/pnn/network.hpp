#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pnn/blocks.hpp"
#include "pnn/layers.hpp"

namespace pnn {

enum class BlockFamily {
    basic_residual,      // two 3x3 convs per block
    bottleneck_residual, // 1x1 / 3x3 / 1x1 (x4) per block
    wide_basic_residual, // basic blocks over widened stages
};

inline const char* family_name(BlockFamily f) {
    switch (f) {
        case BlockFamily::basic_residual: return "basic-residual";
        case BlockFamily::bottleneck_residual: return "bottleneck-residual";
        case BlockFamily::wide_basic_residual: return "wide-basic-residual";
    }
    return "?";
}

/// Declarative description of a residual classifier.
/// stage_widths are per-stage filter counts (bottleneck: inner widths,
/// output channels are 4x). stage_feature_sizes are the spatial sizes of
/// each stage; consecutive sizes determine the downsampling strides.
struct ArchitectureSpec {
    BlockFamily family = BlockFamily::basic_residual;
    int n = 1;                                  // blocks per stage
    std::vector<std::size_t> stage_widths;
    std::vector<std::size_t> stage_feature_sizes;
    int num_classes = 10;
    std::size_t in_channels = 3;
    std::size_t input_size = 32;                // square inputs
    std::size_t stem_width = 16;

    void validate() const {
        if (n < 1) throw ConfigError("architecture: n must be >= 1");
        if (num_classes < 2) throw ConfigError("architecture: num_classes must be >= 2");
        if (stage_widths.empty()) throw ConfigError("architecture: no stages");
        if (stage_widths.size() != stage_feature_sizes.size())
            throw ConfigError("architecture: stage_widths and stage_feature_sizes differ in length");
        if (stem_width == 0) throw ConfigError("architecture: stem_width must be positive");
        if (stage_feature_sizes.front() != input_size)
            throw ShapeError("architecture: first stage feature size must equal the input size (stem is stride 1)");
        for (std::size_t i = 1; i < stage_feature_sizes.size(); ++i) {
            const std::size_t prev = stage_feature_sizes[i - 1], cur = stage_feature_sizes[i];
            if (cur == 0 || prev % cur != 0 || prev / cur > 2 || prev / cur < 1)
                throw ShapeError("architecture: stage feature sizes must halve or stay (got " +
                                 std::to_string(prev) + " -> " + std::to_string(cur) + ")");
        }
    }
};

/// A built network: stem (3x3 conv + bn + relu), residual stages, global
/// average pooling and a fully connected classifier. All trainable
/// tensors and batch-norm running statistics live in a flat name ->
/// ParamTensor registry.
template <typename T>
class Network {
public:
    Network() = default;
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    Tensor<T> forward(const Tensor<T>& input, bool train) {
        Tensor<T> x = input;
        for (auto& l : layers_) x = l->forward(x, train);
        return x;
    }

    Tensor<T> backward(const Tensor<T>& grad_logits) {
        Tensor<T> g = grad_logits;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            g = (*it)->backward(g);
        return g;
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    const std::vector<ParamTensor<T>*>& params() const { return params_; }

    ParamTensor<T>* param(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : it->second;
    }

    /// Trainable parameter count; running statistics excluded.
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto* p : params_)
            if (p->trainable) n += p->numel();
        return n;
    }

    /// Stem parameters in canonical order: conv.weight, bn.gamma, bn.beta,
    /// bn.running_mean, bn.running_var. This is the weight-exchange surface.
    std::vector<ParamTensor<T>*> stem_parameters() const {
        std::vector<ParamTensor<T>*> out;
        for (auto* p : params_)
            if (p->name.rfind("stem.", 0) == 0) out.push_back(p);
        if (out.empty()) throw ShapeError("network has no stem parameters");
        return out;
    }

    /// Weighted layers on the main path (stem conv, block convs, classifier).
    int weighted_layer_count() const {
        int n = 0;
        for (const auto& l : layers_) n += l->weighted_layers();
        return n;
    }

    const ArchitectureSpec& spec() const { return spec_; }

    template <typename U>
    friend Network<U> build_network(const ArchitectureSpec&, SeededRng&);

private:
    void register_layer(const std::string& prefix, std::unique_ptr<Layer<T>> layer) {
        layer->collect_params(prefix, params_);
        layers_.push_back(std::move(layer));
    }

    void finalize_registry() {
        for (auto* p : params_) {
            if (!by_name_.emplace(p->name, p).second)
                throw ConfigError("duplicate parameter name: " + p->name);
        }
    }

    ArchitectureSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<ParamTensor<T>*> params_;
    std::map<std::string, ParamTensor<T>*> by_name_;
};

/// Constructs and He-initializes a network from its spec. Identical
/// (spec, rng state) pairs produce bit-identical parameters.
template <typename T>
Network<T> build_network(const ArchitectureSpec& spec, SeededRng& rng) {
    spec.validate();
    Network<T> net;
    net.spec_ = spec;

    auto stem_conv = std::make_unique<Conv2d<T>>(spec.in_channels, spec.stem_width, 3, 1, 1);
    stem_conv->init_he(rng);
    net.register_layer("stem.conv.", std::move(stem_conv));
    net.register_layer("stem.bn.", std::make_unique<BatchNorm2d<T>>(spec.stem_width));
    net.register_layer("", std::make_unique<ReLU<T>>());

    const bool bottleneck = spec.family == BlockFamily::bottleneck_residual;
    std::size_t in_ch = spec.stem_width;
    for (std::size_t s = 0; s < spec.stage_widths.size(); ++s) {
        const std::size_t width = spec.stage_widths[s];
        const std::size_t stride0 =
            s == 0 ? 1 : spec.stage_feature_sizes[s - 1] / spec.stage_feature_sizes[s];
        for (int b = 0; b < spec.n; ++b) {
            const std::size_t stride = b == 0 ? stride0 : 1;
            const std::string prefix =
                "stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
            if (bottleneck) {
                auto block = std::make_unique<BottleneckBlock<T>>(in_ch, width, stride);
                block->init_he(rng);
                net.register_layer(prefix, std::move(block));
                in_ch = width * BottleneckBlock<T>::expansion;
            } else {
                auto block = std::make_unique<BasicBlock<T>>(in_ch, width, stride);
                block->init_he(rng);
                net.register_layer(prefix, std::move(block));
                in_ch = width;
            }
        }
    }

    net.register_layer("", std::make_unique<GlobalAvgPool<T>>());
    auto fc = std::make_unique<Dense<T>>(in_ch, static_cast<std::size_t>(spec.num_classes));
    fc->init_he(rng);
    net.register_layer("fc.", std::move(fc));
    net.finalize_registry();
    return net;
}

} // namespace pnn
