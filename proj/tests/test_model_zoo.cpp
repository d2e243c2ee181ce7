#include <gtest/gtest.h>

#include <set>

#include "pnn/model_zoo.hpp"

using namespace pnn;

namespace {

template <typename T = float>
Network<T> build_named(const std::string& name, std::uint32_t seed = 1) {
    SeededRng rng(seed, "init");
    return build_network<T>(named_architecture(name), rng);
}

} // namespace

TEST(ModelZoo, ParamCountsMatchReferenceExactly) {
    EXPECT_EQ(build_named("resnet20").param_count(), 272474u);
    EXPECT_EQ(build_named("wideresnet14").param_count(), 258458u);
    EXPECT_EQ(build_named("resnet164").param_count(), 1727284u);
    EXPECT_EQ(build_named("wideresnet110").param_count(), 1637428u);
}

TEST(ModelZoo, EnsemblePairCounts) {
    EXPECT_EQ(build_named("resnet20").param_count() + build_named("wideresnet14").param_count(),
              530932u);
    EXPECT_EQ(build_named("resnet164").param_count() + build_named("wideresnet110").param_count(),
              3364712u);
}

TEST(ModelZoo, WeightedLayerFormulas) {
    // 6n+2 / 4n+2 / 9n+2 / 6n+2 with n = {3,3,18,18}
    const auto r20 = build_named("resnet20");
    EXPECT_EQ(r20.weighted_layer_count(), 20);
    EXPECT_EQ(formula_weighted_layers(r20.spec()), 20);
    const auto w14 = build_named("wideresnet14");
    EXPECT_EQ(w14.weighted_layer_count(), 14);
    EXPECT_EQ(formula_weighted_layers(w14.spec()), 14);
    const auto r164 = build_named("resnet164");
    EXPECT_EQ(r164.weighted_layer_count(), 164);
    EXPECT_EQ(formula_weighted_layers(r164.spec()), 164);
    const auto w110 = build_named("wideresnet110");
    EXPECT_EQ(w110.weighted_layer_count(), 110);
    EXPECT_EQ(formula_weighted_layers(w110.spec()), 110);
}

TEST(ModelZoo, ForwardShapes) {
    auto r20 = build_named("resnet20");
    Tensor<float> in({2, 3, 32, 32});
    const auto logits = r20.forward(in, false);
    EXPECT_EQ(logits.shape, (std::vector<std::size_t>{2, 10}));

    auto w14 = build_named("wideresnet14");
    const auto logits2 = w14.forward(in, false);
    EXPECT_EQ(logits2.shape, (std::vector<std::size_t>{2, 10}));

    auto tiny = build_named("tiny");
    Tensor<float> tin({2, 3, 8, 8});
    const auto logits3 = tiny.forward(tin, false);
    EXPECT_EQ(logits3.shape, (std::vector<std::size_t>{2, 3}));
}

TEST(ModelZoo, ZeroInputYieldsFiniteLogits) {
    for (const auto& name : known_architectures()) {
        auto net = build_named(name);
        const auto& spec = net.spec();
        Tensor<float> in({1, spec.in_channels, spec.input_size, spec.input_size});
        const auto logits = net.forward(in, false);
        EXPECT_TRUE(logits.all_finite()) << name;
        EXPECT_EQ(logits.dim(1), static_cast<std::size_t>(spec.num_classes)) << name;
    }
}

TEST(ModelZoo, SameSeedBuildsIdenticalNetworks) {
    auto a = build_named("tiny-deep", 99);
    auto b = build_named("tiny-deep", 99);
    ASSERT_EQ(a.params().size(), b.params().size());
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        const auto* pa = a.params()[i];
        const auto* pb = b.params()[i];
        ASSERT_EQ(pa->name, pb->name);
        ASSERT_EQ(pa->value.data, pb->value.data) << pa->name;
    }
    auto c = build_named("tiny-deep", 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.params().size(); ++i)
        if (a.params()[i]->trainable && a.params()[i]->value.data != c.params()[i]->value.data)
            any_diff = true;
    EXPECT_TRUE(any_diff);
}

TEST(ModelZoo, StemParameterEnumeration) {
    const auto r20 = build_named("resnet20");
    const auto stem = r20.stem_parameters();
    ASSERT_EQ(stem.size(), 5u);
    EXPECT_EQ(stem[0]->name, "stem.conv.weight");
    EXPECT_EQ(stem[0]->value.shape, (std::vector<std::size_t>{16, 3, 3, 3}));
    EXPECT_EQ(stem[1]->name, "stem.bn.gamma");
    EXPECT_EQ(stem[2]->name, "stem.bn.beta");
    EXPECT_EQ(stem[3]->name, "stem.bn.running_mean");
    EXPECT_EQ(stem[4]->name, "stem.bn.running_var");
    for (std::size_t i = 1; i < 5; ++i)
        EXPECT_EQ(stem[i]->value.shape, (std::vector<std::size_t>{16}));
    EXPECT_TRUE(stem[0]->trainable);
    EXPECT_FALSE(stem[3]->trainable);
    EXPECT_FALSE(stem[4]->trainable);

    // the wide nets share the 16-channel stem; tiny nets use 8
    const auto w14 = build_named("wideresnet14");
    EXPECT_EQ(w14.stem_parameters()[0]->value.shape, (std::vector<std::size_t>{16, 3, 3, 3}));
    const auto tiny = build_named("tiny");
    EXPECT_EQ(tiny.stem_parameters()[0]->value.shape, (std::vector<std::size_t>{8, 3, 3, 3}));
}

TEST(ModelZoo, RegistryNamesAreUniqueAndComplete) {
    const auto net = build_named("tiny-deep");
    std::set<std::string> names;
    std::size_t trainable_elems = 0;
    for (const auto* p : net.params()) {
        EXPECT_TRUE(names.insert(p->name).second) << "duplicate " << p->name;
        if (p->trainable) trainable_elems += p->numel();
    }
    EXPECT_EQ(trainable_elems, net.param_count());
    EXPECT_NE(net.param("stem.conv.weight"), nullptr);
    EXPECT_NE(net.param("fc.bias"), nullptr);
    EXPECT_EQ(net.param("no.such.param"), nullptr);
}

TEST(ModelZoo, GeometryValidation) {
    ArchitectureSpec bad = named_architecture("tiny");
    bad.stage_feature_sizes = {7}; // != input 8
    SeededRng rng(1, "init");
    EXPECT_THROW(build_network<float>(bad, rng), ShapeError);

    ArchitectureSpec bad2 = named_architecture("tiny-deep");
    bad2.stage_feature_sizes = {8, 3}; // 8/3 is not integral
    EXPECT_THROW(build_network<float>(bad2, rng), ShapeError);

    ArchitectureSpec bad3 = named_architecture("tiny");
    bad3.n = 0;
    EXPECT_THROW(build_network<float>(bad3, rng), ConfigError);

    ArchitectureSpec bad4 = named_architecture("tiny");
    bad4.num_classes = 1;
    EXPECT_THROW(build_network<float>(bad4, rng), ConfigError);

    EXPECT_THROW(named_architecture("resnet9000"), ConfigError);
}

TEST(ModelZoo, UnknownNameListsAvailable) {
    try {
        named_architecture("nope");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("resnet20"), std::string::npos);
        EXPECT_NE(msg.find("wideresnet110"), std::string::npos);
        EXPECT_NE(msg.find("tiny"), std::string::npos);
    }
}
