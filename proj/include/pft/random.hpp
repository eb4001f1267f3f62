#pragma once

#include <cstdint>
#include <random>

namespace pft {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent component seeds from
/// one top-level seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

// Stream ids for derive_seed. Fixed so that logged seeds stay stable.
namespace seed_stream {
inline constexpr std::uint64_t base_init = 1;
inline constexpr std::uint64_t base_train = 2;
inline constexpr std::uint64_t clustering = 3;
inline constexpr std::uint64_t fine_tune = 4;
inline constexpr std::uint64_t adaptation = 5;
inline constexpr std::uint64_t synthetic = 6;
} // namespace seed_stream

} // namespace pft
