#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace bursty {

// Sequential generator used for every SDE path. Normal deviates come from
// std::normal_distribution, so bit-level reproducibility is tied to the
// standard library implementation recorded in kGeneratorName.
using Engine = std::mt19937_64;

inline constexpr const char* kGeneratorName = "mt19937_64+normal_distribution(libstdc++)/v1";
inline constexpr const char* kKeyedGeneratorName = "splitmix64-keyed/v1";

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent 64-bit seed for stream `key` of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
    return mix64(seed ^ mix64(key + 0x9e3779b97f4a7c15ULL));
}

// SplitMix64 as a UniformRandomBitGenerator. Cheap to construct, so one
// instance per (seed, key) gives a counter-based stream that can be
// regenerated out of order.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}
    constexpr SplitMix64(std::uint64_t seed, std::uint64_t key) noexcept
        : state_(derive_seed(seed, key)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

}  // namespace bursty
