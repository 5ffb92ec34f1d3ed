#pragma once

// Counter-based randomness: every consumer derives a fresh generator from
// (seed, stream name, counters) so results do not depend on call order or
// thread scheduling, and fixtures are bit-reproducible across platforms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace mortenv {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Burn a couple of outputs so nearby seeds decorrelate.
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double next_normal() {
        // Box-Muller; draws two uniforms per variate to stay stateless.
        const double u1 = 1.0 - next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    long next_poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            // Knuth multiplication method.
            const double limit = std::exp(-mean);
            long k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= next_unit();
            } while (p > limit);
            return k - 1;
        }
        // Split recursively; each half stays in the exact-method regime.
        const double half = mean / 2.0;
        return next_poisson(half) + next_poisson(mean - half);
    }

    // First k entries of a uniformly shuffled 0..n-1 (partial Fisher-Yates).
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        const int take = k < n ? k : n;
        for (int i = 0; i < take; ++i) {
            const int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(take);
        return idx;
    }

private:
    std::uint64_t state_;
};

// Named sub-stream: all randomness flows from one seed, keyed by purpose
// and up to two counters (round, replicate, ...).
inline Rng stream_rng(std::uint64_t seed, std::string_view stream,
                      std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = fnv1a64(stream);
    std::uint64_t mix = seed;
    h ^= splitmix64(mix);
    mix = a + 0x632be59bd9b4e019ull;
    h ^= splitmix64(mix);
    mix = b + 0x9e6c63d0876a9a47ull;
    h ^= splitmix64(mix);
    return Rng(h);
}

}  // namespace mortenv
