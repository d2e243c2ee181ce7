#pragma once

#include <string>
#include <vector>

#include "pnn/network.hpp"

namespace pnn {

/// Named architecture registry. The four full-scale models reproduce the
/// reference parameter counts exactly:
///   resnet20       272,474    basic,      n=3,  stages {16,32,64}
///   wideresnet14   258,458    basic,      n=3,  stages {32,64}
///   resnet164    1,727,284    bottleneck, n=18, stages {16,32,64}
///   wideresnet110 1,637,428   bottleneck, n=18, stages {32,64}
/// All four share a 16-channel stem, which keeps StemBlocks
/// shape-congruent across cord pairs. The tiny-* specs are desk-scale
/// miniatures (8x8 inputs, 8-channel stems) used by tests and demos.
inline ArchitectureSpec named_architecture(const std::string& name) {
    ArchitectureSpec s;
    if (name == "resnet20") {
        s.family = BlockFamily::basic_residual;
        s.n = 3;
        s.stage_widths = {16, 32, 64};
        s.stage_feature_sizes = {32, 16, 8};
        s.num_classes = 10;
        s.stem_width = 16;
    } else if (name == "wideresnet14") {
        s.family = BlockFamily::wide_basic_residual;
        s.n = 3;
        s.stage_widths = {32, 64};
        s.stage_feature_sizes = {32, 16};
        s.num_classes = 10;
        s.stem_width = 16;
    } else if (name == "resnet164") {
        s.family = BlockFamily::bottleneck_residual;
        s.n = 18;
        s.stage_widths = {16, 32, 64};
        s.stage_feature_sizes = {32, 16, 8};
        s.num_classes = 100;
        s.stem_width = 16;
    } else if (name == "wideresnet110") {
        s.family = BlockFamily::bottleneck_residual;
        s.n = 18;
        s.stage_widths = {32, 64};
        s.stage_feature_sizes = {32, 16};
        s.num_classes = 100;
        s.stem_width = 16;
    } else if (name == "tiny") {
        s.family = BlockFamily::basic_residual;
        s.n = 1;
        s.stage_widths = {8};
        s.stage_feature_sizes = {8};
        s.num_classes = 3;
        s.input_size = 8;
        s.stem_width = 8;
    } else if (name == "tiny-deep") {
        s.family = BlockFamily::basic_residual;
        s.n = 2;
        s.stage_widths = {8, 16};
        s.stage_feature_sizes = {8, 4};
        s.num_classes = 3;
        s.input_size = 8;
        s.stem_width = 8;
    } else if (name == "tiny-wide") {
        s.family = BlockFamily::wide_basic_residual;
        s.n = 1;
        s.stage_widths = {16, 32};
        s.stage_feature_sizes = {8, 4};
        s.num_classes = 3;
        s.input_size = 8;
        s.stem_width = 8;
    } else {
        throw ConfigError("unknown architecture '" + name + "'; available: " +
                          "resnet20, wideresnet14, resnet164, wideresnet110, "
                          "tiny, tiny-deep, tiny-wide");
    }
    return s;
}

inline std::vector<std::string> known_architectures() {
    return {"resnet20", "wideresnet14", "resnet164", "wideresnet110",
            "tiny", "tiny-deep", "tiny-wide"};
}

/// Expected weighted-layer count from the family formula:
/// 3-stage basic 6n+2, 2-stage basic 4n+2, 3-stage bottleneck 9n+2,
/// 2-stage bottleneck 6n+2.
inline int formula_weighted_layers(const ArchitectureSpec& s) {
    const int convs_per_block = s.family == BlockFamily::bottleneck_residual ? 3 : 2;
    return static_cast<int>(s.stage_widths.size()) * s.n * convs_per_block + 2;
}

} // namespace pnn
