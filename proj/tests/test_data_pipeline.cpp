#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pnn/dataset.hpp"

using namespace pnn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "pnn_data_test";
    fs::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hand-built two-record cifar10 file with known labels and pixel bytes.
fs::path write_fixture_cifar10() {
    const auto path = temp_dir() / "fixture2.bin";
    std::ofstream out(path, std::ios::binary);
    out.put(3);
    for (int i = 0; i < 3072; ++i) out.put(static_cast<char>(i % 251));
    out.put(7);
    for (int i = 0; i < 3072; ++i) out.put(static_cast<char>((i * 7) % 253));
    return path;
}

} // namespace

TEST(CifarLoader, FixtureRoundTripsExactly) {
    const auto path = write_fixture_cifar10();
    const auto ds = load_cifar_binary({path.string()}, CifarVariant::cifar10);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.labels, (std::vector<int>{3, 7}));
    EXPECT_EQ(ds.image(0)[0], 0);
    EXPECT_EQ(ds.image(0)[1], 1);
    EXPECT_EQ(ds.image(1)[2], 14);

    const auto out = temp_dir() / "fixture2_out.bin";
    serialize_cifar(ds, out.string(), CifarVariant::cifar10);
    EXPECT_EQ(read_bytes(path), read_bytes(out));
}

TEST(CifarLoader, Cifar100CoarseByteRoundTrips) {
    const auto path = temp_dir() / "c100.bin";
    {
        std::ofstream out(path, std::ios::binary);
        for (int rec = 0; rec < 3; ++rec) {
            out.put(static_cast<char>(rec + 10)); // coarse
            out.put(static_cast<char>(rec + 90)); // fine
            for (int i = 0; i < 3072; ++i) out.put(static_cast<char>((i + rec) % 256));
        }
    }
    const auto ds = load_cifar_binary({path.string()}, CifarVariant::cifar100);
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.labels, (std::vector<int>{90, 91, 92})); // fine labels used
    EXPECT_EQ(ds.coarse_labels, (std::vector<std::uint8_t>{10, 11, 12}));

    const auto out = temp_dir() / "c100_out.bin";
    serialize_cifar(ds, out.string(), CifarVariant::cifar100);
    EXPECT_EQ(read_bytes(path), read_bytes(out));
}

TEST(CifarLoader, TruncatedFileRejectedWithOffset) {
    const auto good = write_fixture_cifar10();
    const auto bad = temp_dir() / "truncated.bin";
    auto bytes = read_bytes(good);
    bytes.pop_back(); // one byte short
    {
        std::ofstream out(bad, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    try {
        load_cifar_binary({bad.string()}, CifarVariant::cifar10);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("3073"), std::string::npos); // record offset
    }
}

TEST(CifarLoader, BadLabelRejected) {
    const auto path = temp_dir() / "badlabel.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out.put(11); // label 11 in a 10-class set
        for (int i = 0; i < 3072; ++i) out.put(0);
    }
    EXPECT_THROW(load_cifar_binary({path.string()}, CifarVariant::cifar10), DataError);
}

TEST(CifarLoader, MissingFileRejected) {
    EXPECT_THROW(load_cifar_binary({"/nonexistent/never.bin"}, CifarVariant::cifar10), DataError);
}

TEST(PixelMean, ComputedFromGivenSplitOnly) {
    ImageDataset ds;
    ds.channels = 1;
    ds.height = 1;
    ds.width = 2;
    ds.class_count = 2;
    ds.pixels = {0, 255, 255, 255};
    ds.labels = {0, 1};
    const auto mean = compute_pixel_mean(ds);
    ASSERT_EQ(mean.size(), 2u);
    EXPECT_NEAR(mean[0], 0.5f * (0 + 255) / 255.0f, 1e-6);
    EXPECT_NEAR(mean[1], 1.0f, 1e-6);
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

namespace {

ImageDataset one_image_dataset() {
    ImageDataset ds;
    ds.channels = 1;
    ds.height = 4;
    ds.width = 4;
    ds.class_count = 2;
    for (int i = 0; i < 16; ++i) ds.pixels.push_back(static_cast<std::uint8_t>(i * 10));
    ds.labels = {1};
    return ds;
}

} // namespace

TEST(Augment, CenteredCropIsIdentity) {
    const auto ds = one_image_dataset();
    AugmentConfig cfg = AugmentConfig::for_mode(AugmentMode::test, 4, 4, 2);
    cfg.subtract_mean = false;
    std::vector<float> out(16);
    augment(ds.image(0), 1, 4, 4, cfg, {}, nullptr, out.data());
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(out[i], i * 10 / 255.0f, 1e-6);
}

TEST(Augment, FlipIsAnInvolution) {
    const auto ds = one_image_dataset();
    AugmentConfig cfg = AugmentConfig::for_mode(AugmentMode::validation, 4, 4, 0);
    cfg.subtract_mean = false;
    cfg.hflip_prob = 1.0; // forced flip
    SeededRng rng(1, "flip");
    std::vector<float> flipped(16);
    augment(ds.image(0), 1, 4, 4, cfg, {}, &rng, flipped.data());

    std::vector<float> plain(16);
    AugmentConfig none = cfg;
    none.mode = AugmentMode::test;
    augment(ds.image(0), 1, 4, 4, none, {}, nullptr, plain.data());

    // flipping the flipped tensor restores the original
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            EXPECT_FLOAT_EQ(flipped[y * 4 + (3 - x)], plain[y * 4 + x]);
}

TEST(Augment, TrainDrawsReplayDeterministically) {
    const auto ds = one_image_dataset();
    AugmentConfig cfg = AugmentConfig::for_mode(AugmentMode::train, 4, 4, 1);
    cfg.subtract_mean = false;
    std::vector<std::vector<float>> first;
    {
        SeededRng rng(42, "aug");
        for (int i = 0; i < 100; ++i) {
            std::vector<float> out(16);
            augment(ds.image(0), 1, 4, 4, cfg, {}, &rng, out.data());
            first.push_back(std::move(out));
        }
    }
    SeededRng rng(42, "aug");
    bool any_nontrivial = false;
    for (int i = 0; i < 100; ++i) {
        std::vector<float> out(16);
        augment(ds.image(0), 1, 4, 4, cfg, {}, &rng, out.data());
        ASSERT_EQ(out, first[i]) << "draw " << i;
        if (out != first[0]) any_nontrivial = true;
    }
    EXPECT_TRUE(any_nontrivial); // crops/flips actually vary
}

TEST(Augment, MeanSubtractionAppliesInTestMode) {
    const auto ds = one_image_dataset();
    const auto mean = compute_pixel_mean(ds);
    AugmentConfig cfg = AugmentConfig::for_mode(AugmentMode::test, 4, 4, 0);
    std::vector<float> out(16);
    augment(ds.image(0), 1, 4, 4, cfg, mean, nullptr, out.data());
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(out[i], 0.0f, 1e-6); // single image == its mean
}

TEST(Augment, TrainModeOutputShapeIsAlwaysCropShape) {
    // batches keep (C, crop, crop) for every random offset
    ImageDataset ds;
    ds.channels = 3;
    ds.height = 32;
    ds.width = 32;
    ds.class_count = 2;
    ds.pixels.assign(3 * 32 * 32 * 2, 100);
    ds.labels = {0, 1};
    ds.pixel_mean = compute_pixel_mean(ds);
    SeededRng rng(3, "aug32");
    DatasetView view{&ds, {0, 1}, AugmentConfig::for_mode(AugmentMode::train, 32, 32, 4), &rng};
    for (int i = 0; i < 10; ++i) {
        const auto [batch, labels] = make_batch<float>(view, 0, 2);
        ASSERT_EQ(batch.shape, (std::vector<std::size_t>{2, 3, 32, 32}));
        ASSERT_EQ(labels.size(), 2u);
    }
}

// ---------------------------------------------------------------------------
// Validation split
// ---------------------------------------------------------------------------

TEST(Split, NinetyTenPartition) {
    SeededRng rng(5, "split");
    const auto [train, val] = split_validation(100, 0.1, rng);
    EXPECT_EQ(val.size(), 10u);
    EXPECT_EQ(train.size(), 90u);
    std::vector<bool> seen(100, false);
    for (auto i : train) seen[i] = true;
    for (auto i : val) {
        EXPECT_FALSE(seen[i]) << "index in both sides";
        seen[i] = true;
    }
    for (bool s : seen) EXPECT_TRUE(s);
}

TEST(Split, MinimalTwoElementSplit) {
    SeededRng rng(6, "split");
    const auto [train, val] = split_validation(2, 0.5, rng);
    EXPECT_EQ(train.size(), 1u);
    EXPECT_EQ(val.size(), 1u);
}

TEST(Split, DeterministicPerStreamAndDistinctAcrossStreams) {
    SeededRng a1(7, "split");
    SeededRng a2(7, "split");
    const auto s1 = split_validation(1000, 0.1, a1);
    const auto s2 = split_validation(1000, 0.1, a2);
    EXPECT_EQ(s1.second, s2.second);

    SeededRng b(7, "split-other");
    const auto s3 = split_validation(1000, 0.1, b);
    EXPECT_NE(s1.second, s3.second);
}

TEST(Split, RejectsEmptySides) {
    SeededRng rng(8, "split");
    EXPECT_THROW(split_validation(5, 0.01, rng), ConfigError);
    EXPECT_THROW(split_validation(5, 0.99, rng), ConfigError);
    EXPECT_THROW(split_validation(100, 0.0, rng), ConfigError);
}

// ---------------------------------------------------------------------------
// Synthetic blobs
// ---------------------------------------------------------------------------

namespace {

// nearest-class-mean classifier: centroids estimated on `fit`, accuracy
// measured on `eval` (held-out draws avoid resubstitution optimism)
double nearest_centroid_accuracy(const ImageDataset& fit, const ImageDataset& eval_ds) {
    const std::size_t d = fit.image_size();
    std::vector<std::vector<double>> centroid(fit.class_count, std::vector<double>(d, 0.0));
    std::vector<int> count(fit.class_count, 0);
    for (std::size_t i = 0; i < fit.size(); ++i) {
        ++count[fit.labels[i]];
        for (std::size_t j = 0; j < d; ++j) centroid[fit.labels[i]][j] += fit.image(i)[j];
    }
    for (int c = 0; c < fit.class_count; ++c)
        for (auto& v : centroid[c]) v /= std::max(count[c], 1);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < eval_ds.size(); ++i) {
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < fit.class_count; ++c) {
            double dist = 0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = eval_ds.image(i)[j] - centroid[c][j];
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        if (best == eval_ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(eval_ds.size());
}

double nearest_centroid_accuracy(const ImageDataset& ds) {
    return nearest_centroid_accuracy(ds, ds);
}

} // namespace

TEST(Synthetic, SeparatedBlobsAreNearestCentroidClassifiable) {
    const auto ds = make_synthetic(3, 20, 3, 8, 8, 5.0, 123);
    EXPECT_EQ(ds.size(), 60u);
    EXPECT_GE(nearest_centroid_accuracy(ds), 0.95);
    int per_class[3] = {0, 0, 0};
    for (int l : ds.labels) ++per_class[l];
    EXPECT_EQ(per_class[0], 20);
    EXPECT_EQ(per_class[1], 20);
    EXPECT_EQ(per_class[2], 20);
}

TEST(Synthetic, ZeroSeparationIsChance) {
    const auto fit = make_synthetic(4, 50, 3, 8, 8, 0.0, 7, "train");
    const auto held_out = make_synthetic(4, 50, 3, 8, 8, 0.0, 7, "test");
    const double acc = nearest_centroid_accuracy(fit, held_out);
    EXPECT_NEAR(acc, 0.25, 0.15);
}

TEST(Synthetic, DeterministicAndRoundTrippable) {
    const auto a = make_synthetic(3, 10, 3, 8, 8, 4.0, 99);
    const auto b = make_synthetic(3, 10, 3, 8, 8, 4.0, 99);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_EQ(a.labels, b.labels);

    const auto path = temp_dir() / "synth.bin";
    serialize_records(a, path.string());
    const auto back = load_records_file(path.string(), 3, 8, 8, 3);
    EXPECT_EQ(back.pixels, a.pixels);
    EXPECT_EQ(back.labels, a.labels);

    const auto out2 = temp_dir() / "synth2.bin";
    serialize_records(back, out2.string());
    EXPECT_EQ(read_bytes(path), read_bytes(out2));
}

TEST(Synthetic, Validation) {
    EXPECT_THROW(make_synthetic(1, 10, 3, 8, 8, 5.0, 1), ConfigError);
    EXPECT_THROW(make_synthetic(3, 0, 3, 8, 8, 5.0, 1), ConfigError);
}
