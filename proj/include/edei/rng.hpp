#pragma once

#include <cstdint>
#include <limits>

namespace edei {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                           std::uint64_t c = 0) {
    return splitmix64(splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b) ^ c);
}

// Streams keep independent draws apart when they share (seed, x, y).
enum class RngStream : std::uint64_t {
    ShortNoise = 1,
    EventNoise = 2,
    Degradation = 3,
    Crop = 4,
    Shuffle = 5,
};

/// Counter-based generator: the n-th output is a pure function of (key, n), so
/// per-pixel generators can be created in any order or in parallel.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}
    CounterRng(std::uint64_t seed, RngStream stream, std::uint64_t x = 0, std::uint64_t y = 0)
        : key_(derive_seed(seed, static_cast<std::uint64_t>(stream), x, y)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace edei
