#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eignn {

// Fixed substream tags; every consumer of randomness derives its own stream
// from (seed, tag, index) so adding a consumer never perturbs the others.
namespace stream {
inline constexpr std::uint64_t train_sample = 1;
inline constexpr std::uint64_t test_sample = 2;
inline constexpr std::uint64_t validation_pick = 3;
inline constexpr std::uint64_t param_init = 4;
inline constexpr std::uint64_t shuffle = 5;
inline constexpr std::uint64_t unlabeled_draw = 6;
inline constexpr std::uint64_t mtl_pick = 7;
inline constexpr std::uint64_t subsample = 8;
inline constexpr std::uint64_t landscape = 9;
}  // namespace stream

// Deterministic PRNG used everywhere instead of <random>, whose distributions
// are implementation-defined. Substreams derived from (seed, tag, index) keep
// results independent of evaluation order and thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    static Rng substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
        return Rng(mix(mix(seed, tag), index));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n). Multiply-shift map; bias is O(n / 2^64).
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller (one value per call, second discarded).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace eignn
