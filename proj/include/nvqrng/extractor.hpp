#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nvqrng/entropy.hpp"
#include "nvqrng/timestamps.hpp"

namespace nvqrng {

struct ExtractionResult {
  std::vector<std::uint8_t> bytes;
  /// photons_used * log2(M); bytes holds ceil(bit_count / 8) bytes with the
  /// final byte zero-padded on the right.
  std::uint64_t bit_count = 0;
  std::uint64_t photons_used = 0;
  std::uint64_t photons_discarded_same_period = 0;
  std::uint64_t elapsed_ps = 0;
  double bits_per_second = 0.0;
};

/// Smallest timestamp grid a bin width may resolve.
inline constexpr std::int64_t kTimestampResolutionPs = 25;

/// Maps the first arrival of every period to its bin index and packs the
/// indices MSB-first into bytes. Period boundaries are anchored at t = 0;
/// bins are half-open [i*tau, (i+1)*tau). Throws InputError for an unsorted
/// stream and ConfigError for bins narrower than the timestamp grid.
ExtractionResult extract(const TimestampStream& stream, const BinningConfig& cfg);

/// Bits per second: log2(M) * photons_used / elapsed seconds; 0 when nothing
/// was extracted.
double throughput(const ExtractionResult& result, const BinningConfig& cfg);
double throughput(const ExtractionResult& result);

/// Bin indices of the periods holding exactly one arrival.
std::vector<std::uint32_t> single_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                  const BinningConfig& cfg);

/// MSB-first packing of fixed-width symbols.
std::vector<std::uint8_t> pack_symbols(std::span<const std::uint32_t> symbols, int bits_per_symbol);

namespace reference {

/// Single-threaded first-arrival extraction; returns one symbol per used photon.
std::vector<std::uint32_t> first_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                 const BinningConfig& cfg,
                                                 std::uint64_t* discarded);

}  // namespace reference

/// Same output as reference::first_arrival_symbols, computed on period-aligned
/// chunks in parallel.
std::vector<std::uint32_t> first_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                 const BinningConfig& cfg,
                                                 std::uint64_t* discarded);

}  // namespace nvqrng
