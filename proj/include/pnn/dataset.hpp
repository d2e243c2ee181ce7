#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "pnn/error.hpp"
#include "pnn/rng.hpp"
#include "pnn/tensor.hpp"

namespace pnn {

/// Immutable image dataset: byte pixels in channel-major (C,H,W) order,
/// integer labels, and the per-position pixel mean (in [0,1] units)
/// computed from the training split only.
struct ImageDataset {
    std::size_t channels = 0, height = 0, width = 0;
    int class_count = 0;
    std::vector<std::uint8_t> pixels;        // size() * image_size() bytes
    std::vector<int> labels;
    std::vector<std::uint8_t> coarse_labels; // cifar100 only; kept for round-trips
    std::vector<float> pixel_mean;           // image_size() floats, or empty

    std::size_t size() const { return labels.size(); }
    std::size_t image_size() const { return channels * height * width; }
    const std::uint8_t* image(std::size_t i) const { return pixels.data() + i * image_size(); }
};

enum class CifarVariant { cifar10, cifar100 };

namespace detail {

inline void load_records(const std::string& path, std::size_t image_bytes,
                         int class_count, bool has_coarse, ImageDataset& ds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    in.seekg(0, std::ios::end);
    const std::size_t file_size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    const std::size_t record = image_bytes + (has_coarse ? 2 : 1);
    if (file_size % record != 0)
        throw DataError("format error in " + path + ": trailing partial record at byte " +
                        std::to_string((file_size / record) * record) + " (file size " +
                        std::to_string(file_size) + ", record size " + std::to_string(record) + ")");
    const std::size_t count = file_size / record;
    std::vector<std::uint8_t> buf(record);
    for (std::size_t r = 0; r < count; ++r) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record)))
            throw DataError("read failure in " + path + " at record " + std::to_string(r));
        std::size_t off = 0;
        if (has_coarse) ds.coarse_labels.push_back(buf[off++]);
        const int label = buf[off++];
        if (label >= class_count)
            throw DataError("corrupt label " + std::to_string(label) + " (class_count " +
                            std::to_string(class_count) + ") in " + path + " record " +
                            std::to_string(r));
        ds.labels.push_back(label);
        ds.pixels.insert(ds.pixels.end(), buf.begin() + static_cast<long>(off), buf.end());
    }
}

} // namespace detail

/// Loads CIFAR-format binary files. cifar10 records are 1 label byte +
/// 3072 channel-major RGB bytes; cifar100 records carry a coarse byte
/// first (parsed, kept for serialization, otherwise ignored) and use the
/// fine label. The pixel mean is left empty; compute it from the
/// training split with compute_pixel_mean.
inline ImageDataset load_cifar_binary(const std::vector<std::string>& paths, CifarVariant variant) {
    ImageDataset ds;
    ds.channels = 3;
    ds.height = 32;
    ds.width = 32;
    ds.class_count = variant == CifarVariant::cifar10 ? 10 : 100;
    for (const auto& p : paths)
        detail::load_records(p, ds.image_size(), ds.class_count,
                             variant == CifarVariant::cifar100, ds);
    if (ds.size() == 0) throw DataError("no records loaded");
    return ds;
}

/// Writes a dataset back to the CIFAR binary record layout. Loading a
/// file and re-serializing it is byte-identical.
inline void serialize_cifar(const ImageDataset& ds, const std::string& path, CifarVariant variant) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    const bool coarse = variant == CifarVariant::cifar100;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (coarse) {
            const std::uint8_t cb = i < ds.coarse_labels.size() ? ds.coarse_labels[i] : 0;
            out.put(static_cast<char>(cb));
        }
        out.put(static_cast<char>(ds.labels[i]));
        out.write(reinterpret_cast<const char*>(ds.image(i)),
                  static_cast<std::streamsize>(ds.image_size()));
    }
}

/// Generic single-label-byte record layout for non-32x32 datasets
/// (synthetic exports use this).
inline void serialize_records(const ImageDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.put(static_cast<char>(ds.labels[i]));
        out.write(reinterpret_cast<const char*>(ds.image(i)),
                  static_cast<std::streamsize>(ds.image_size()));
    }
}

inline ImageDataset load_records_file(const std::string& path, std::size_t channels,
                                      std::size_t height, std::size_t width, int class_count) {
    ImageDataset ds;
    ds.channels = channels;
    ds.height = height;
    ds.width = width;
    ds.class_count = class_count;
    detail::load_records(path, ds.image_size(), class_count, false, ds);
    return ds;
}

/// Mean pixel value per (channel, y, x) position over the whole dataset,
/// in [0,1] units. Call on the training split only.
inline std::vector<float> compute_pixel_mean(const ImageDataset& ds) {
    std::vector<double> acc(ds.image_size(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::uint8_t* img = ds.image(i);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += img[j];
    }
    std::vector<float> mean(acc.size());
    const double scale = 1.0 / (255.0 * static_cast<double>(ds.size()));
    for (std::size_t j = 0; j < acc.size(); ++j)
        mean[j] = static_cast<float>(acc[j] * scale);
    return mean;
}

/// Gaussian class blobs in byte space with inter-center distance
/// separation * sigma, so nearest-center classification succeeds w.h.p.
/// once separation >= 4. Half of the squared separation lives in
/// per-channel mean offsets (which survive spatial pooling, so small
/// convolutional classifiers can generalize from it) and half in random
/// per-pixel directions.
inline ImageDataset make_synthetic(int classes, int per_class,
                                   std::size_t channels, std::size_t height, std::size_t width,
                                   double separation, std::uint32_t seed,
                                   const std::string& stream_tag = "train") {
    if (classes < 2) throw ConfigError("make_synthetic: need at least 2 classes");
    if (per_class < 1) throw ConfigError("make_synthetic: per_class must be >= 1");
    ImageDataset ds;
    ds.channels = channels;
    ds.height = height;
    ds.width = width;
    ds.class_count = classes;
    const std::size_t dim = ds.image_size();
    const std::size_t hw = height * width;
    const double sigma = 24.0;
    const double target = separation * sigma; // full-space inter-center distance

    // Centers depend only on the seed so train/test splits share geometry.
    SeededRng center_rng(seed, "synthetic/centers");
    const std::size_t k = static_cast<std::size_t>(classes);

    // Channel-mean component: orthonormal class directions in channel
    // space (possible while classes <= channels), pairwise distance
    // sqrt(2), scaled so its full-space contribution is target/sqrt(2).
    std::vector<std::vector<double>> chan(k, std::vector<double>(channels, 0.0));
    const bool use_channel_part = k <= channels;
    if (use_channel_part) {
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& v : chan[c]) v = center_rng.normal();
            for (std::size_t prev = 0; prev < c; ++prev) { // Gram-Schmidt
                double dot = 0;
                for (std::size_t j = 0; j < channels; ++j) dot += chan[c][j] * chan[prev][j];
                for (std::size_t j = 0; j < channels; ++j) chan[c][j] -= dot * chan[prev][j];
            }
            double norm2 = 0;
            for (double v : chan[c]) norm2 += v * v;
            const double scale = norm2 > 1e-12
                                     ? target / (2.0 * std::sqrt(static_cast<double>(hw)) *
                                                 std::sqrt(norm2))
                                     : 0.0;
            for (auto& v : chan[c]) v *= scale;
        }
    }

    // Per-pixel component: random near-orthogonal directions with radius
    // chosen so their pairwise full-space distance is ~target/sqrt(2)
    // (the full radius when there is no channel part).
    const double pix_radius = use_channel_part ? target / 2.0 : target / std::sqrt(2.0);
    std::vector<std::vector<double>> centers(k, std::vector<double>(dim));
    for (std::size_t c = 0; c < k; ++c) {
        double norm2 = 0.0;
        for (auto& v : centers[c]) {
            v = center_rng.normal();
            norm2 += v * v;
        }
        const double scale = norm2 > 0 ? pix_radius / std::sqrt(norm2) : 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const std::size_t ch = j / hw;
            centers[c][j] = 128.0 + centers[c][j] * scale +
                            (use_channel_part ? chan[c][ch] : 0.0);
        }
    }

    SeededRng noise_rng(seed, "synthetic/noise/" + stream_tag);
    for (int cls = 0; cls < classes; ++cls)
        for (int s = 0; s < per_class; ++s) {
            ds.labels.push_back(cls);
            for (std::size_t j = 0; j < dim; ++j) {
                const double v = centers[static_cast<std::size_t>(cls)][j] + sigma * noise_rng.normal();
                ds.pixels.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
            }
        }
    return ds;
}

// ---------------------------------------------------------------------------
// Augmentation and views
// ---------------------------------------------------------------------------

enum class AugmentMode { train, validation, test };

/// Augmentation policy. train: zero-pad, random crop back to (crop_h,
/// crop_w), random horizontal flip, mean subtraction. validation: random
/// flip + mean subtraction. test: mean subtraction only. Mean
/// subtraction applies in every mode (it is normalization, not
/// augmentation) unless subtract_mean is cleared.
struct AugmentConfig {
    AugmentMode mode = AugmentMode::test;
    std::size_t pad = 4;
    std::size_t crop_h = 32, crop_w = 32;
    double hflip_prob = 0.5;
    bool subtract_mean = true;

    static AugmentConfig for_mode(AugmentMode m, std::size_t h, std::size_t w, std::size_t pad_ = 4) {
        AugmentConfig c;
        c.mode = m;
        c.pad = pad_;
        c.crop_h = h;
        c.crop_w = w;
        return c;
    }
};

/// Converts one byte image to reals in [0,1], applying the policy in cfg.
/// Writes channels*crop_h*crop_w values to `out`. The rng is consumed
/// only for the draws the mode performs (train: dy, dx, flip;
/// validation: flip; test: none).
template <typename T>
void augment(const std::uint8_t* img, std::size_t channels, std::size_t height, std::size_t width,
             const AugmentConfig& cfg, const std::vector<float>& mean, SeededRng* rng, T* out) {
    std::size_t dy = cfg.pad, dx = cfg.pad; // centered crop == identity
    bool flip = false;
    if (cfg.mode != AugmentMode::test && rng == nullptr)
        throw ConfigError("augment: train/validation mode needs an rng stream");
    if (cfg.mode == AugmentMode::train) {
        if (height + 2 * cfg.pad < cfg.crop_h || width + 2 * cfg.pad < cfg.crop_w)
            throw ShapeError("augment: crop larger than padded image");
        const std::size_t range_y = height + 2 * cfg.pad - cfg.crop_h;
        const std::size_t range_x = width + 2 * cfg.pad - cfg.crop_w;
        dy = rng->below(static_cast<std::uint32_t>(range_y + 1));
        dx = rng->below(static_cast<std::uint32_t>(range_x + 1));
        flip = rng->bernoulli(cfg.hflip_prob);
    } else if (cfg.mode == AugmentMode::validation) {
        flip = rng->bernoulli(cfg.hflip_prob);
    }

    const bool use_mean = cfg.subtract_mean && !mean.empty();
    if (use_mean && mean.size() != channels * cfg.crop_h * cfg.crop_w)
        throw ShapeError("augment: pixel mean does not match the output grid");
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < cfg.crop_h; ++y)
            for (std::size_t x = 0; x < cfg.crop_w; ++x) {
                const std::size_t sx_unflipped = flip ? cfg.crop_w - 1 - x : x;
                // position in the padded frame, then back to source coords
                const long py = static_cast<long>(y + dy) - static_cast<long>(cfg.pad);
                const long px = static_cast<long>(sx_unflipped + dx) - static_cast<long>(cfg.pad);
                double v = 0.0;
                if (py >= 0 && py < static_cast<long>(height) && px >= 0 && px < static_cast<long>(width))
                    v = img[(c * height + static_cast<std::size_t>(py)) * width +
                            static_cast<std::size_t>(px)] / 255.0;
                if (use_mean) {
                    // mean is indexed at the output position (post-crop grid)
                    v -= mean[(c * cfg.crop_h + y) * cfg.crop_w + x];
                }
                *out++ = static_cast<T>(v);
            }
}

/// Read-only slice of a dataset with an augmentation policy. The rng
/// pointer identifies the stream that feeds the view's random draws; it
/// may be null for test-mode views.
struct DatasetView {
    const ImageDataset* data = nullptr;
    std::vector<std::size_t> indices;
    AugmentConfig aug;
    SeededRng* rng = nullptr;

    std::size_t size() const { return indices.size(); }
};

/// Assembles a batch [count, C, crop_h, crop_w] from view positions
/// [first, first+count).
template <typename T>
std::pair<Tensor<T>, std::vector<int>> make_batch(const DatasetView& view,
                                                  std::size_t first, std::size_t count) {
    const ImageDataset& ds = *view.data;
    Tensor<T> batch({count, ds.channels, view.aug.crop_h, view.aug.crop_w});
    std::vector<int> labels(count);
    T* out = batch.data.data();
    const std::size_t stride = ds.channels * view.aug.crop_h * view.aug.crop_w;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = view.indices[first + i];
        labels[i] = ds.labels[idx];
        augment(ds.image(idx), ds.channels, ds.height, ds.width, view.aug,
                ds.pixel_mean, view.rng, out + i * stride);
    }
    return {std::move(batch), std::move(labels)};
}

/// Fresh uniform-random disjoint train/validation index split.
/// |val| = round(fraction * N); the two sets partition [0, N).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_validation(std::size_t n, double fraction, SeededRng& rng) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ConfigError("split_validation: fraction must be in (0,1)");
    const std::size_t val_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (val_n == 0 || val_n >= n)
        throw ConfigError("split_validation: fraction " + std::to_string(fraction) +
                          " leaves an empty side for n=" + std::to_string(n));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    shuffle_inplace(all, rng);
    std::vector<std::size_t> val(all.begin(), all.begin() + static_cast<long>(val_n));
    std::vector<std::size_t> train(all.begin() + static_cast<long>(val_n), all.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(val)};
}

} // namespace pnn
