#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nll {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a tag path, e.g.
/// derive_seed(run_seed, {kShuffleStream, epoch}).
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t s = mix64(base);
    for (std::uint64_t t : tags) s = mix64(s ^ mix64(t + 0x632be59bd9b4e019ULL));
    return s;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Stream tags for derive_seed. Values are part of the reproducibility
/// contract: changing them changes every run's output.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kAugment = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kSplit = 5;
inline constexpr std::uint64_t kConsistency = 6;
inline constexpr std::uint64_t kMixtureMeans = 7;
inline constexpr std::uint64_t kSamples = 8;
inline constexpr std::uint64_t kTestSamples = 9;
}  // namespace stream

}  // namespace nll
