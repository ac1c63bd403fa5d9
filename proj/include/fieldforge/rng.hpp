#pragma once

#include <cstdint>
#include <random>

namespace fieldforge {

// splitmix64 finalizer; the only mixing function used for seed derivation so
// derived streams are identical on every platform.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` within purpose `stream` of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

// Stream identifiers for derive_seed.
namespace streams {
inline constexpr std::uint64_t chains = 1;
inline constexpr std::uint64_t gain_batch = 2;
inline constexpr std::uint64_t iis_batch = 3;
inline constexpr std::uint64_t partition_estimate = 4;
} // namespace streams

using Engine = std::mt19937_64;

// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Engine& engine, std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01(engine) * static_cast<double>(n));
    return i < n ? i : n - 1;
}

} // namespace fieldforge
