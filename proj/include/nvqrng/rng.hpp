#pragma once

#include <cstdint>
#include <random>

namespace nvqrng {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sub-stream seed for (master, stream id, purpose), independent of how work
/// is scheduled across threads.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t purpose = 0) noexcept {
  return mix64(mix64(mix64(master) ^ stream) ^ (purpose * 0xd1b54a32d192ed03ULL));
}

namespace seed_purpose {
inline constexpr std::uint64_t emission = 1;
inline constexpr std::uint64_t background = 2;
inline constexpr std::uint64_t dark = 3;
inline constexpr std::uint64_t split = 4;
}  // namespace seed_purpose

}  // namespace nvqrng
