#pragma once

#include <algorithm>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/network.hpp"
#include "pnn/optimizer.hpp"

namespace pnn {

/// One row per global epoch: learning rate, training loss/accuracy of the
/// last subepoch, validation accuracy from the epoch's gate evaluation.
struct TrainLogRow {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

using TrainLog = std::vector<TrainLogRow>;

struct SubepochStats {
    double loss = 0.0;
    double acc = 0.0;
};

namespace detail {

template <typename T>
std::size_t count_correct(const Tensor<T>& logits, const std::vector<int>& labels) {
    std::size_t correct = 0;
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (logits.at2(i, j) > logits.at2(i, best)) best = j;
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return correct;
}

} // namespace detail

/// One full pass over the (shuffled) training view in minibatches, with
/// an SGD step per batch; the last partial batch is kept. Returns the
/// sample-weighted mean loss and accuracy over the pass. The rng drives
/// both the shuffle and the per-image augmentation draws.
template <typename T>
SubepochStats train_subepoch(Network<T>& net, const DatasetView& train_view,
                             const OptimizerConfig& cfg, double lr, SeededRng& rng) {
    if (train_view.size() == 0) throw DataError("train_subepoch: empty dataset view");
    DatasetView view = train_view;
    view.rng = &rng;
    shuffle_inplace(view.indices, rng);

    const std::size_t n = view.size();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t first = 0; first < n; first += bs) {
        const std::size_t count = std::min(bs, n - first);
        auto [batch, labels] = make_batch<T>(view, first, count);
        Tensor<T> logits = net.forward(batch, true);
        auto sm = softmax_cross_entropy(logits, labels);
        loss_sum += sm.loss * static_cast<double>(count);
        correct += detail::count_correct(logits, labels);
        Tensor<T> dlogits = softmax_cross_entropy_backward(sm.probs, labels);
        net.backward(dlogits);
        sgd_step(net.params(), lr, cfg);
    }
    return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

struct EvalResult {
    double acc = 0.0;
    double err_pct = 0.0; // 100 * (1 - acc), unrounded
};

/// Accuracy of argmax predictions over a view, in eval mode (batch norm
/// uses running statistics; the network is not mutated). Augmentation
/// follows the view's policy; validation-mode views consume flips from
/// the view's rng stream.
template <typename T>
EvalResult evaluate(Network<T>& net, const DatasetView& view, std::size_t batch_size = 128) {
    if (view.size() == 0) throw DataError("evaluate: empty dataset view");
    std::size_t correct = 0;
    for (std::size_t first = 0; first < view.size(); first += batch_size) {
        const std::size_t count = std::min(batch_size, view.size() - first);
        auto [batch, labels] = make_batch<T>(view, first, count);
        Tensor<T> logits = net.forward(batch, false);
        correct += detail::count_correct(logits, labels);
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(view.size());
    return {acc, 100.0 * (1.0 - acc)};
}

} // namespace pnn
