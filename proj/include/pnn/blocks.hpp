#pragma once

#include <memory>
#include <optional>

#include "pnn/layers.hpp"

namespace pnn {

namespace detail {

template <typename T>
Tensor<T> add_tensors(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "residual add");
    Tensor<T> out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

} // namespace detail

/// Two 3x3 convolutions with batch norm and an identity (or projected)
/// skip connection: out = relu(bn2(conv2(relu(bn1(conv1(x))))) + skip(x)).
/// The projection (1x1 conv + bn) is present when the block changes
/// channel count or resolution.
template <typename T>
class BasicBlock : public Layer<T> {
public:
    BasicBlock(std::size_t in_ch, std::size_t out_ch, std::size_t stride)
        : conv1_(in_ch, out_ch, 3, stride, 1), bn1_(out_ch),
          conv2_(out_ch, out_ch, 3, 1, 1), bn2_(out_ch) {
        if (stride != 1 || in_ch != out_ch) {
            proj_conv_ = std::make_unique<Conv2d<T>>(in_ch, out_ch, 1, stride, 0);
            proj_bn_ = std::make_unique<BatchNorm2d<T>>(out_ch);
        }
    }

    void init_he(SeededRng& rng) {
        conv1_.init_he(rng);
        conv2_.init_he(rng);
        if (proj_conv_) proj_conv_->init_he(rng);
    }

    Tensor<T> forward(const Tensor<T>& input, bool train) override {
        Tensor<T> skip = proj_conv_ ? proj_bn_->forward(proj_conv_->forward(input, train), train)
                                    : input;
        Tensor<T> h = relu1_.forward(bn1_.forward(conv1_.forward(input, train), train), train);
        h = bn2_.forward(conv2_.forward(h, train), train);
        return relu2_.forward(detail::add_tensors(h, skip), train);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        Tensor<T> g = relu2_.backward(grad_out); // gradient of (h + skip)
        Tensor<T> g_main = conv1_.backward(bn1_.backward(relu1_.backward(
            conv2_.backward(bn2_.backward(g)))));
        Tensor<T> g_skip = proj_conv_ ? proj_conv_->backward(proj_bn_->backward(g))
                                      : std::move(g);
        return detail::add_tensors(g_main, g_skip);
    }

    void collect_params(const std::string& prefix,
                        std::vector<ParamTensor<T>*>& out) override {
        conv1_.collect_params(prefix + "conv1.", out);
        bn1_.collect_params(prefix + "bn1.", out);
        conv2_.collect_params(prefix + "conv2.", out);
        bn2_.collect_params(prefix + "bn2.", out);
        if (proj_conv_) {
            proj_conv_->collect_params(prefix + "proj.conv.", out);
            proj_bn_->collect_params(prefix + "proj.bn.", out);
        }
    }

    int weighted_layers() const override { return 2; } // projection not counted

private:
    Conv2d<T> conv1_;
    BatchNorm2d<T> bn1_;
    Conv2d<T> conv2_;
    BatchNorm2d<T> bn2_;
    ReLU<T> relu1_, relu2_;
    std::unique_ptr<Conv2d<T>> proj_conv_;
    std::unique_ptr<BatchNorm2d<T>> proj_bn_;
};

/// 1x1 reduce -> 3x3 -> 1x1 expand (x4) bottleneck with batch norm after
/// each convolution and a projected skip when the shape changes.
template <typename T>
class BottleneckBlock : public Layer<T> {
public:
    static constexpr std::size_t expansion = 4;

    BottleneckBlock(std::size_t in_ch, std::size_t width, std::size_t stride)
        : conv1_(in_ch, width, 1, 1, 0), bn1_(width),
          conv2_(width, width, 3, stride, 1), bn2_(width),
          conv3_(width, width * expansion, 1, 1, 0), bn3_(width * expansion) {
        const std::size_t out_ch = width * expansion;
        if (stride != 1 || in_ch != out_ch) {
            proj_conv_ = std::make_unique<Conv2d<T>>(in_ch, out_ch, 1, stride, 0);
            proj_bn_ = std::make_unique<BatchNorm2d<T>>(out_ch);
        }
    }

    void init_he(SeededRng& rng) {
        conv1_.init_he(rng);
        conv2_.init_he(rng);
        conv3_.init_he(rng);
        if (proj_conv_) proj_conv_->init_he(rng);
    }

    Tensor<T> forward(const Tensor<T>& input, bool train) override {
        Tensor<T> skip = proj_conv_ ? proj_bn_->forward(proj_conv_->forward(input, train), train)
                                    : input;
        Tensor<T> h = relu1_.forward(bn1_.forward(conv1_.forward(input, train), train), train);
        h = relu2_.forward(bn2_.forward(conv2_.forward(h, train), train), train);
        h = bn3_.forward(conv3_.forward(h, train), train);
        return relu3_.forward(detail::add_tensors(h, skip), train);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override {
        Tensor<T> g = relu3_.backward(grad_out);
        Tensor<T> g_main = conv1_.backward(bn1_.backward(relu1_.backward(
            conv2_.backward(bn2_.backward(relu2_.backward(
                conv3_.backward(bn3_.backward(g))))))));
        Tensor<T> g_skip = proj_conv_ ? proj_conv_->backward(proj_bn_->backward(g))
                                      : std::move(g);
        return detail::add_tensors(g_main, g_skip);
    }

    void collect_params(const std::string& prefix,
                        std::vector<ParamTensor<T>*>& out) override {
        conv1_.collect_params(prefix + "conv1.", out);
        bn1_.collect_params(prefix + "bn1.", out);
        conv2_.collect_params(prefix + "conv2.", out);
        bn2_.collect_params(prefix + "bn2.", out);
        conv3_.collect_params(prefix + "conv3.", out);
        bn3_.collect_params(prefix + "bn3.", out);
        if (proj_conv_) {
            proj_conv_->collect_params(prefix + "proj.conv.", out);
            proj_bn_->collect_params(prefix + "proj.bn.", out);
        }
    }

    int weighted_layers() const override { return 3; }

private:
    Conv2d<T> conv1_;
    BatchNorm2d<T> bn1_;
    Conv2d<T> conv2_;
    BatchNorm2d<T> bn2_;
    Conv2d<T> conv3_;
    BatchNorm2d<T> bn3_;
    ReLU<T> relu1_, relu2_, relu3_;
    std::unique_ptr<Conv2d<T>> proj_conv_;
    std::unique_ptr<BatchNorm2d<T>> proj_bn_;
};

} // namespace pnn
