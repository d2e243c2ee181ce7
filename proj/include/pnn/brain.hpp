#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/model_zoo.hpp"
#include "pnn/training.hpp"

namespace pnn {

// ---------------------------------------------------------------------------
// Patience gate
// ---------------------------------------------------------------------------

/// Patience-gate state machine. A validation accuracy that does not
/// strictly improve on the best seen so far raises the patience level;
/// once the level exceeds max_patience the swap condition arms. The
/// condition is consumed (and the level reset to 0) by the swap itself at
/// the top of the next global epoch. max_patience < 0 means infinite
/// patience: the gate tracks state but never arms.
struct PatienceGate {
    int patience_level = 0;
    long max_patience = -1;
    double current_best_acc = 0.0;
    bool weight_swap_condition = false;
};

/// One gate transition. Returns the (possibly armed) swap condition.
inline bool gate_update(PatienceGate& gate, double new_acc) {
    if (new_acc > gate.current_best_acc) {
        gate.patience_level = 1;
        gate.weight_swap_condition = false;
        gate.current_best_acc = new_acc;
    } else {
        gate.patience_level += 1;
        gate.weight_swap_condition =
            gate.max_patience >= 0 && gate.patience_level > gate.max_patience;
    }
    return gate.weight_swap_condition;
}

/// Resets the gate after its armed condition has been consumed by a swap.
inline void gate_consume_swap(PatienceGate& gate) {
    gate.patience_level = 0;
    gate.weight_swap_condition = false;
}

// ---------------------------------------------------------------------------
// Nerve cords and stem exchange
// ---------------------------------------------------------------------------

/// One member network of a PNN: the network, its subepoch budget, the
/// rng stream driving its shuffles and augmentation draws, and its log.
template <typename T>
struct NerveCord {
    std::string id;
    Network<T> net;
    int sub_epochs = 1;
    long completed_subepochs = 0;
    SeededRng train_rng;
    TrainLog log;
    SubepochStats last_train{};
};

/// Builds a cord whose init/train streams are keyed by (seed, cord id),
/// so a cord's evolution is independent of how many cords share a brain.
template <typename T>
NerveCord<T> make_cord(const std::string& id, const ArchitectureSpec& arch,
                       int sub_epochs, std::uint32_t seed) {
    if (sub_epochs < 1) throw ConfigError("cord '" + id + "': sub_epochs must be >= 1");
    NerveCord<T> cord;
    cord.id = id;
    SeededRng init_rng(seed, "init/" + id);
    cord.net = build_network<T>(arch, init_rng);
    cord.sub_epochs = sub_epochs;
    cord.train_rng = SeededRng(seed, "train/" + id);
    return cord;
}

namespace detail {

template <typename T>
void check_stem_congruent(const std::vector<ParamTensor<T>*>& a,
                          const std::vector<ParamTensor<T>*>& b) {
    if (a.size() != b.size())
        throw ShapeError("stem swap: parameter lists differ in length");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]->name != b[i]->name)
            throw ShapeError("stem swap: parameter order mismatch at " + a[i]->name);
        if (!a[i]->value.same_shape(b[i]->value))
            throw ShapeError("stem swap: incompatible shapes for " + a[i]->name + ": " +
                             a[i]->value.shape_str() + " vs " + b[i]->value.shape_str());
    }
}

} // namespace detail

/// Bit-exact exchange of the complete StemBlock state between two
/// networks: conv weight, bn gamma/beta, bn running statistics, and the
/// momentum buffers and gradients attached to them. All shapes are
/// validated before anything moves, so a mismatch never half-swaps.
template <typename T>
void swap_stems(Network<T>& a, Network<T>& b) {
    auto sa = a.stem_parameters();
    auto sb = b.stem_parameters();
    detail::check_stem_congruent(sa, sb);
    for (std::size_t i = 0; i < sa.size(); ++i) {
        std::swap(sa[i]->value.data, sb[i]->value.data);
        std::swap(sa[i]->grad.data, sb[i]->grad.data);
        std::swap(sa[i]->momentum_buf.data, sb[i]->momentum_buf.data);
    }
}

template <typename T>
void swap_stems(NerveCord<T>& a, NerveCord<T>& b) {
    swap_stems(a.net, b.net);
}

/// Ring rotation for n > 2 cords: cord i receives cord i-1's stem.
/// With two cords this degenerates to the pairwise swap.
template <typename T>
void rotate_stems(std::vector<NerveCord<T>>& cords) {
    for (std::size_t i = cords.size() - 1; i > 0; --i)
        swap_stems(cords[i - 1].net, cords[i].net);
}

// ---------------------------------------------------------------------------
// Soft voting
// ---------------------------------------------------------------------------

template <typename T>
struct SoftVote {
    Tensor<T> probs;
    std::vector<int> predictions;
};

/// Elementwise arithmetic mean of probability tensors [N,K] with argmax
/// predictions; ties break toward the lowest class index.
template <typename T>
SoftVote<T> soft_vote(const std::vector<const Tensor<T>*>& prob_sets) {
    if (prob_sets.empty()) throw ConfigError("soft_vote: no inputs");
    const Tensor<T>& first = *prob_sets.front();
    for (const auto* p : prob_sets) require_same_shape(first, *p, "soft_vote");
    const std::size_t n = first.dim(0), k = first.dim(1);
    SoftVote<T> out;
    out.probs = Tensor<T>({n, k});
    const double inv = 1.0 / static_cast<double>(prob_sets.size());
    for (std::size_t i = 0; i < first.numel(); ++i) {
        double s = 0.0;
        for (const auto* p : prob_sets) s += (*p)[i];
        out.probs[i] = static_cast<T>(s * inv);
    }
    out.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (out.probs.at2(i, j) > out.probs.at2(i, best)) best = j;
        out.predictions[i] = static_cast<int>(best);
    }
    return out;
}

template <typename T>
SoftVote<T> soft_vote(const std::vector<Tensor<T>>& prob_sets) {
    std::vector<const Tensor<T>*> ptrs;
    ptrs.reserve(prob_sets.size());
    for (const auto& p : prob_sets) ptrs.push_back(&p);
    return soft_vote(ptrs);
}

/// Per-cord and soft-voted accuracy over a view. Every batch is
/// assembled once and fed to all networks, so the cords and the ensemble
/// are scored on identical inputs. Set keep_probs to also return each
/// network's full probability tensor.
template <typename T>
struct EnsembleEval {
    std::vector<double> cord_acc;
    double ensemble_acc = 0.0;
    std::vector<Tensor<T>> cord_probs; // filled when keep_probs
};

template <typename T>
EnsembleEval<T> ensemble_evaluate(std::vector<Network<T>*> nets, const DatasetView& view,
                                  bool keep_probs = false, std::size_t batch_size = 128) {
    if (nets.empty()) throw ConfigError("ensemble_evaluate: no networks");
    if (view.size() == 0) throw DataError("ensemble_evaluate: empty view");
    const std::size_t m = nets.size();
    EnsembleEval<T> res;
    res.cord_acc.assign(m, 0.0);
    std::vector<std::size_t> cord_correct(m, 0);
    std::size_t ens_correct = 0;

    std::vector<Tensor<T>> kept(m);
    const std::size_t k = static_cast<std::size_t>(nets.front()->spec().num_classes);
    if (keep_probs)
        for (std::size_t i = 0; i < m; ++i) kept[i] = Tensor<T>({view.size(), k});

    for (std::size_t first = 0; first < view.size(); first += batch_size) {
        const std::size_t count = std::min(batch_size, view.size() - first);
        auto [batch, labels] = make_batch<T>(view, first, count);
        std::vector<Tensor<T>> batch_probs(m);
        for (std::size_t i = 0; i < m; ++i) {
            Tensor<T> logits = nets[i]->forward(batch, false);
            batch_probs[i] = softmax_cross_entropy(logits, labels).probs;
            cord_correct[i] += detail::count_correct(batch_probs[i], labels);
            if (keep_probs)
                std::copy(batch_probs[i].data.begin(), batch_probs[i].data.end(),
                          kept[i].data.begin() + static_cast<long>(first * k));
        }
        SoftVote<T> vote = soft_vote(batch_probs);
        for (std::size_t j = 0; j < count; ++j)
            if (vote.predictions[j] == labels[j]) ++ens_correct;
    }
    for (std::size_t i = 0; i < m; ++i)
        res.cord_acc[i] = static_cast<double>(cord_correct[i]) / static_cast<double>(view.size());
    res.ensemble_acc = static_cast<double>(ens_correct) / static_cast<double>(view.size());
    if (keep_probs) res.cord_probs = std::move(kept);
    return res;
}

// ---------------------------------------------------------------------------
// Brain orchestration
// ---------------------------------------------------------------------------

enum class SwapTopology { pairwise_swap, ring_rotation };
enum class GateSignal { ensemble_validation, per_cord };

struct BrainConfig {
    int global_epochs = 0;
    long max_patience = -1;         // -1 = infinite patience (independent training)
    SwapTopology topology = SwapTopology::pairwise_swap;
    GateSignal signal = GateSignal::ensemble_validation;
    long swap_period_subepochs = 0; // > 0 replaces the gate with fixed-frequency swaps
    double validation_fraction = 0.1;
};

/// Mutable orchestration state shared across global epochs.
struct BrainState {
    PatienceGate gate;
    std::vector<PatienceGate> cord_gates; // per-cord signal mode
    long total_subepochs = 0;
    int swap_count = 0;
    SeededRng split_rng;
    SeededRng val_rng;

    BrainState(const BrainConfig& cfg, std::size_t n_cords, std::uint32_t seed)
        : split_rng(seed, "split"), val_rng(seed, "val") {
        gate.max_patience = cfg.max_patience;
        cord_gates.assign(n_cords, PatienceGate{});
        for (auto& g : cord_gates) g.max_patience = cfg.max_patience;
    }

    bool swap_pending(const BrainConfig& cfg) const {
        if (cfg.swap_period_subepochs > 0)
            return total_subepochs >= cfg.swap_period_subepochs * (swap_count + 1);
        if (cfg.signal == GateSignal::per_cord) {
            for (const auto& g : cord_gates)
                if (g.weight_swap_condition) return true;
            return false;
        }
        return gate.weight_swap_condition;
    }
};

struct EpochRecord {
    int epoch = 0;
    bool swap_occurred = false;
    std::vector<double> cord_val_acc;
    double ensemble_val_acc = 0.0;
    int patience_level = 0;
    double best_acc = 0.0;
};

/// One global epoch, in Algorithm-1 order: consume a pending swap
/// condition, train every cord for its subepoch budget, draw the epoch's
/// fresh validation split, score cords and ensemble on it, and update the
/// gate from the configured signal. The epoch's training runs on the
/// train side of the same split its validation uses.
template <typename T>
EpochRecord run_global_epoch(std::vector<NerveCord<T>>& cords, BrainState& state,
                             const ImageDataset& train_data, const OptimizerConfig& opt,
                             const BrainConfig& cfg, const AugmentConfig& train_aug,
                             const AugmentConfig& val_aug, int epoch_index) {
    EpochRecord rec;
    rec.epoch = epoch_index;

    // (1) brain: consume a pending swap condition
    if (state.swap_pending(cfg) && cords.size() > 1) {
        if (cfg.topology == SwapTopology::pairwise_swap) {
            if (cords.size() != 2)
                throw ConfigError("pairwise-swap topology requires exactly 2 cords");
            swap_stems(cords[0], cords[1]);
        } else {
            rotate_stems(cords);
        }
        gate_consume_swap(state.gate);
        for (auto& g : state.cord_gates) gate_consume_swap(g);
        ++state.swap_count;
        rec.swap_occurred = true;
    }

    // (2) fresh split for this epoch; cords train on its train side
    auto [train_idx, val_idx] =
        split_validation(train_data.size(), cfg.validation_fraction, state.split_rng);
    DatasetView train_view{&train_data, std::move(train_idx), train_aug, nullptr};
    for (auto& cord : cords) {
        const long total = static_cast<long>(opt.total_epochs) * cord.sub_epochs;
        for (int s = 0; s < cord.sub_epochs; ++s) {
            const double lr = cosine_lr(cord.completed_subepochs, total, opt.base_lr);
            cord.last_train = train_subepoch(cord.net, train_view, opt, lr, cord.train_rng);
            ++cord.completed_subepochs;
            ++state.total_subepochs;
            if (s == cord.sub_epochs - 1)
                cord.log.push_back({epoch_index, lr, cord.last_train.loss, cord.last_train.acc, 0.0});
        }
    }

    // (3) validation accuracies, per cord and soft-voted
    DatasetView val_view{&train_data, std::move(val_idx), val_aug, &state.val_rng};
    std::vector<Network<T>*> nets;
    for (auto& c : cords) nets.push_back(&c.net);
    EnsembleEval<T> ev = ensemble_evaluate(nets, val_view, false);
    rec.cord_val_acc = ev.cord_acc;
    rec.ensemble_val_acc = ev.ensemble_acc;
    for (std::size_t i = 0; i < cords.size(); ++i)
        cords[i].log.back().val_acc = ev.cord_acc[i];

    // (4) gate update from the configured signal
    if (cfg.signal == GateSignal::ensemble_validation) {
        gate_update(state.gate, ev.ensemble_acc);
        rec.patience_level = state.gate.patience_level;
        rec.best_acc = state.gate.current_best_acc;
    } else {
        for (std::size_t i = 0; i < cords.size(); ++i)
            gate_update(state.cord_gates[i], ev.cord_acc[i]);
        int max_level = 0;
        double best = 0.0;
        for (const auto& g : state.cord_gates) {
            max_level = std::max(max_level, g.patience_level);
            best = std::max(best, g.current_best_acc);
        }
        rec.patience_level = max_level;
        rec.best_acc = best;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

struct CordSetup {
    std::string id;
    ArchitectureSpec arch;
    int sub_epochs = 1;
};

struct PnnRunRecord {
    std::uint32_t seed = 0;
    std::vector<std::string> cord_ids;
    std::vector<EpochRecord> epochs;
    std::vector<double> cord_test_err; // percent
    double ensemble_test_err = 0.0;
    int swap_count = 0;
    double wall_seconds = 0.0;
    std::vector<TrainLog> cord_logs;
    // test-time soft-vote detail (kept for exactness checks and reports)
    std::vector<double> cord_test_acc;
    double ensemble_test_acc = 0.0;
};

template <typename T>
struct PnnSetup {
    const ImageDataset* train_data = nullptr;
    const ImageDataset* test_data = nullptr;
    std::vector<CordSetup> cords;
    OptimizerConfig opt;
    BrainConfig brain;
    std::uint32_t seed = 0;
    AugmentConfig train_aug;
    AugmentConfig val_aug;
    AugmentConfig test_aug;
    EnsembleEval<T>* test_eval_out = nullptr;       // capture test-time probabilities
    std::vector<Network<T>>* final_nets_out = nullptr; // capture trained networks
};

/// Runs global_epochs epochs of cooperative training, then evaluates each
/// cord and the soft-voted ensemble on the test set exactly once.
template <typename T>
PnnRunRecord pnn_train(const PnnSetup<T>& setup) {
    if (!setup.train_data || !setup.test_data) throw ConfigError("pnn_train: missing dataset");
    if (setup.cords.empty()) throw ConfigError("pnn_train: no cords");
    setup.opt.validate();
    if (setup.brain.topology == SwapTopology::pairwise_swap && setup.cords.size() > 2)
        throw ConfigError("pairwise-swap topology requires exactly 2 cords");

    const auto t0 = std::chrono::steady_clock::now();
    PnnRunRecord rec;
    rec.seed = setup.seed;

    std::vector<NerveCord<T>> cords;
    for (const auto& cs : setup.cords) {
        cords.push_back(make_cord<T>(cs.id, cs.arch, cs.sub_epochs, setup.seed));
        rec.cord_ids.push_back(cs.id);
    }
    if (cords.size() > 1) {
        for (std::size_t i = 1; i < cords.size(); ++i)
            detail::check_stem_congruent(cords[0].net.stem_parameters(),
                                         cords[i].net.stem_parameters());
    }

    BrainState state(setup.brain, cords.size(), setup.seed);
    for (int e = 0; e < setup.brain.global_epochs; ++e)
        rec.epochs.push_back(run_global_epoch(cords, state, *setup.train_data, setup.opt,
                                              setup.brain, setup.train_aug, setup.val_aug, e));
    rec.swap_count = state.swap_count;

    // Test evaluation happens once, after all training.
    std::vector<Network<T>*> nets;
    for (auto& c : cords) nets.push_back(&c.net);
    std::vector<std::size_t> test_idx(setup.test_data->size());
    std::iota(test_idx.begin(), test_idx.end(), std::size_t{0});
    DatasetView test_view{setup.test_data, std::move(test_idx), setup.test_aug, nullptr};
    EnsembleEval<T> ev = ensemble_evaluate(nets, test_view, setup.test_eval_out != nullptr);
    rec.cord_test_acc = ev.cord_acc;
    rec.ensemble_test_acc = ev.ensemble_acc;
    for (double a : ev.cord_acc) rec.cord_test_err.push_back(100.0 * (1.0 - a));
    rec.ensemble_test_err = 100.0 * (1.0 - ev.ensemble_acc);
    if (setup.test_eval_out) *setup.test_eval_out = std::move(ev);

    for (auto& c : cords) rec.cord_logs.push_back(std::move(c.log));
    if (setup.final_nets_out) {
        setup.final_nets_out->clear();
        for (auto& c : cords) setup.final_nets_out->push_back(std::move(c.net));
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

} // namespace pnn
