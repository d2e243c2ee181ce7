#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pnn {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic random stream: PCG32 keyed by (seed, stream_label).
/// The same (seed, label) pair produces the same sequence on every
/// platform; distinct labels give statistically independent streams.
class SeededRng {
public:
    SeededRng() : SeededRng(0, "") {}

    SeededRng(std::uint32_t seed, std::string_view stream_label)
        : seed_(seed), label_(stream_label) {
        const std::uint64_t lh = detail::fnv1a64(stream_label);
        const std::uint64_t stream = detail::splitmix64(lh);
        const std::uint64_t init = detail::splitmix64(static_cast<std::uint64_t>(seed) ^ (lh * 0x9e3779b97f4a7c15ull));
        inc_ = (stream << 1u) | 1u;
        state_ = 0;
        next_u32();
        state_ += init;
        next_u32();
    }

    std::uint32_t seed() const { return seed_; }
    const std::string& stream_label() const { return label_; }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint32_t below(std::uint32_t bound) {
        const std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            const std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1).
    double uniform() { return next_u32() * 0x1p-32; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; one spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = (next_u32() + 0.5) * 0x1p-32;
        const double u2 = (next_u32() + 0.5) * 0x1p-32;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
    std::uint32_t seed_ = 0;
    std::string label_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Fisher-Yates shuffle, in place.
template <typename T>
void shuffle_inplace(std::vector<T>& items, SeededRng& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        const std::size_t j = rng.below(static_cast<std::uint32_t>(i + 1));
        std::swap(items[i], items[j]);
    }
}

/// Returns a shuffled copy of items.
template <typename T>
std::vector<T> seeded_shuffle(std::vector<T> items, SeededRng& rng) {
    shuffle_inplace(items, rng);
    return items;
}

} // namespace pnn
