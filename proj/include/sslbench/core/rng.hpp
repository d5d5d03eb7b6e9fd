#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sslbench {

// 64-bit FNV-1a, used to fold stream names into seeds.
inline std::uint64_t hash_name(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_u64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_u64(a ^ (mix_u64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Named sub-stream derivation: every source of randomness in the project is
// keyed by (root seed, stream name, counters...) so runs are reproducible and
// resumable without persisting generator state.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    return mix_seed(root, hash_name(stream));
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t c0,
                          Rest... rest) {
    if constexpr (sizeof...(rest) == 0) {
        return mix_seed(derive_seed(root, stream), c0);
    } else {
        return derive_seed(mix_seed(derive_seed(root, stream), c0), "", rest...);
    }
}

// splitmix64 generator with hand-rolled distributions. We avoid the standard
// <random> distributions because their output sequences are not pinned by the
// standard; this keeps byte-reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive, bias-free.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit span
        const std::uint64_t limit = (~std::uint64_t{0} / range) * range;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return lo + static_cast<std::int64_t>(v % range);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, cosine branch only; two uniforms per draw keeps the stream
    // position independent of prior draws.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Resamples until |z| <= clip, then scales.
    double truncated_normal(double stddev, double clip = 2.0) {
        double z = normal();
        while (std::fabs(z) > clip) z = normal();
        return stddev * z;
    }

    // Fisher-Yates over [0, n).
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
            const std::int64_t j = uniform_int(0, i);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    // Child generator for an independent named stream. Does not consume
    // entropy from the parent.
    Rng fork(std::string_view name) const { return Rng(mix_seed(state_, hash_name(name))); }
    Rng fork(std::uint64_t index) const { return Rng(mix_seed(state_, index)); }

private:
    std::uint64_t state_;
};

}  // namespace sslbench
