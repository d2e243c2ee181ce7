#pragma once

// Reference evaluation samples: per-seed test error percentages of the
// single- and dual-network models on the two image benchmarks. These are
// the inputs of the golden statistics checks; the expected statistics
// were verified against an independent reference implementation before
// being frozen here.

#include <vector>

#include "pnn/stats.hpp"

namespace fixtures {

// CIFAR-10, single networks, five seeds each.
inline std::vector<pnn::Sample> cifar10_single() {
    return {
        {"resnet20", {7.50, 7.38, 7.57, 7.49, 7.24}},
        {"wideresnet14", {7.51, 7.66, 7.25, 7.48, 7.89}},
        {"pnn5-resnet20", {8.10, 7.78, 7.17, 7.43, 7.83}},
        {"pnn5-wideresnet14", {7.55, 7.81, 7.78, 7.84, 7.18}},
        {"pnn10-resnet20", {7.88, 7.53, 7.49, 7.16, 7.35}},
        {"pnn10-wideresnet14", {7.29, 7.56, 7.41, 7.36, 7.91}},
        {"pnn15-resnet20", {7.38, 7.02, 7.22, 7.24, 7.48}},
        {"pnn15-wideresnet14", {7.49, 7.26, 7.22, 7.63, 7.24}},
    };
}

// CIFAR-10, dual networks (soft-voted pairs), five seeds each.
inline std::vector<pnn::Sample> cifar10_dual() {
    return {
        {"ensemble", {6.02, 5.87, 6.02, 5.88, 6.12}},
        {"pnn5", {5.95, 6.07, 5.89, 5.87, 6.25}},
        {"pnn10", {5.98, 6.05, 5.99, 5.71, 5.98}},
        {"pnn15", {5.87, 5.80, 5.67, 5.82, 5.88}},
    };
}

// CIFAR-100, single networks, seven seeds each (the four fully
// recoverable rows).
inline std::vector<pnn::Sample> cifar100_single() {
    return {
        {"resnet164", {23.64, 23.67, 23.11, 22.66, 23.85, 23.54, 23.99}},
        {"pnn10-resnet164", {24.01, 23.26, 23.56, 23.24, 24.11, 23.91, 21.38}},
        {"wideresnet110", {23.10, 22.39, 25.49, 23.90, 22.56, 22.76, 25.31}},
        {"pnn15-wideresnet110", {22.09, 22.02, 25.54, 23.65, 22.52, 22.58, 24.23}},
    };
}

// CIFAR-100, dual networks, seven seeds each.
inline std::vector<pnn::Sample> cifar100_dual() {
    return {
        {"ensemble", {20.77, 20.27, 21.08, 20.45, 20.67, 20.59, 21.72}},
        {"pnn10", {20.62, 20.77, 21.53, 20.75, 20.53, 20.92, 24.40}},
        {"pnn15", {20.56, 20.27, 21.58, 20.80, 20.46, 20.62, 21.48}},
        {"pnn20", {20.27, 20.21, 21.76, 20.80, 20.46, 20.41, 20.79}},
    };
}

inline pnn::Sample by_label(const std::vector<pnn::Sample>& set, const std::string& label) {
    for (const auto& s : set)
        if (s.label == label) return s;
    throw std::runtime_error("fixture label not found: " + label);
}

} // namespace fixtures
